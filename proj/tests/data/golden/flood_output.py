def noisy_sum(a, b):
    total = a + b
    for _ in range(200000):
        print("debugging line that floods stdout")
    return total

# Represent the input as a dictionary named 'input'
input = {"a": 3, "b": 5}
output = noisy_sum(**input)
print(output)

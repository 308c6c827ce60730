def gcd(a, b):
    # Euclid's algorithm
    while b:
        a, b = b, a % b
    return a

# Represent the input as a dictionary named 'input'
input = {"a": 84, "b": 36}
# Call the function with the input dictionary, assign the result to 'output'
output = gcd(**input)
# Print the output
print(output)

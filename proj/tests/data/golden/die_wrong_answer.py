def expected_value(probabilities, values):
    return sum(p * v for p, v in zip(probabilities, values))

probabilities = [1/10, 1/10, 1/10, 1/10, 1/10, 1/2] # Probabilities for 1, 2, 3, 4, 5, 6
values = [1, 2, 3, 4, 5, 6] # Values on the die

input = {"probabilities": probabilities, "values": values}
output = expected_value(**input)
print(output)

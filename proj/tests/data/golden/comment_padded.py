# Add two numbers.
# The function below returns their sum.
def add(a, b):
    # Sum of the two inputs
    return a + b

# Represent the input as a dictionary named 'input'
input = {"a": 3, "b": 5}
# Call the function with the input dictionary, assign the result to 'output'
output = add(**input)
# Print the output
print(output)  # trailing comment

from itertools import product

def count_four_digit_numbers():
    count = 0
    # Generate all 4-digit combinations of 1 and 3
    for combo in product([1, 3], repeat=4):
        # Ensure both 1 and 3 appear at least once
        if 1 in combo and 3 in combo:
            count += 1
    return count

# Represent the input as a dictionary named 'input'
input = {}
# Call the function with the input dictionary, assign the result to 'output'
output = count_four_digit_numbers(**input)
# Print the output
print(output)

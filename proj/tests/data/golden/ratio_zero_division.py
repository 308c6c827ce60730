def average_speed(distance, hours):
    # Speed is distance over time
    speed = distance / hours
    rounded = round(speed, 2)
    return rounded

# Represent the input as a dictionary named 'input'
input = {"distance": 120, "hours": 0}
output = average_speed(**input)
print(output)

def days_to_reach_top(well_height, climb_distance, slip_distance):
    days = 0
    current_height = 0
    while current_height < well_height:
        current_height += climb_distance
        if current_height >= well_height:
            break
        current_height -= slip_distance
        days += 1
    return days + 1

input = {"well_height": 20, "climb_distance": 3, "slip_distance": 2}
result = days_to_reach_top(**input)
print(result)

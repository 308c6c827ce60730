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

output = days_to_reach_top(20, 3, 2)
print(output)

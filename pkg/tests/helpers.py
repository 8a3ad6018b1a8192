"""Hand-built vehicles shared by the test modules."""
from radiofp.scenario import VehicleProfile


def make_car(vid=0, length=4.5, v=10.0, a=0.0, direction="forward", entry_time=1.5, lateral=3.5):
    fr = (0.25, 0.5, 0.25)
    segs = [f * length for f in fr]
    segs[-1] = length - segs[0] - segs[1]
    return VehicleProfile(
        vehicle_id=vid,
        class_label="car",
        length=length,
        silhouette=tuple(zip(segs, (0.8, 1.5, 0.9))),
        lateral_offset=lateral,
        entry_velocity=v,
        acceleration=a,
        entry_time=entry_time,
        direction=direction,
        entry_position=-0.5 if direction == "forward" else 10.5,
    )


def make_truck(vid=0, length=12.0, v=10.0, a=0.0, direction="forward", entry_time=1.5, lateral=3.5):
    cab = 0.2 * length
    return VehicleProfile(
        vehicle_id=vid,
        class_label="truck",
        length=length,
        silhouette=((cab, 2.5), (length - cab, 3.5)),
        lateral_offset=lateral,
        entry_velocity=v,
        acceleration=a,
        entry_time=entry_time,
        direction=direction,
        entry_position=-0.5 if direction == "forward" else 10.5,
    )

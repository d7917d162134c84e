"""
Frames and wheel kinematics
===========================

A walk through the coordinate conventions and the no-skid odometry
kinematics: NED navigation frame, forward-right-down body frame, and the
radial-tangential-axial wheel frame of a wheel-mounted IMU.
"""

import numpy as np

from wichins.frames import angle_wrap, body_to_wheel, nav_to_body
from wichins.kinematics import (
    WheelCommandState,
    WheelGeometry,
    forward_kinematics,
    inverse_kinematics_speed,
    inverse_kinematics_steering,
)

np.set_printoptions(precision=4, suppress=True)

###############################################################################
# Attitude: a vehicle heading east (yaw 90 degrees) sees the north axis on
# its left, i.e. along -y in the body frame.

t_nb = nav_to_body(np.array([0.0, 0.0, np.pi / 2]))
print("nav->body at yaw 90deg:")
print(t_nb)
print("north axis in body coordinates:", t_nb @ np.array([1.0, 0.0, 0.0]))

###############################################################################
# Wheel frame: at phase angle zero a left wheel's radial axis points forward
# and its tangential axis points down, so a parked sensor reads gravity on
# the tangential (-y) axis.

t_wb = body_to_wheel(alpha=0.0, beta=0.0, sigma=+1)
print("\nbody->wheel at phase 0:")
print(t_wb)
print("gravity reading in the wheel frame:", t_wb @ np.array([0.0, 0.0, -9.80665]))

###############################################################################
# Phase angles accumulate without bound while a wheel rolls; estimators wrap
# them into [-pi, pi).

for turns in (0.25, 1.0, 1.5):
    a = turns * 2 * np.pi
    print(f"{turns:5.2f} turns = {a:7.4f} rad wraps to {angle_wrap(a):7.4f} rad")

###############################################################################
# Odometry: two fixed wheels on the rear axle, 1.5 m apart, rolling radius
# 0.295 m. Equal wheel speeds drive straight; a speed difference turns.

rear = [
    WheelGeometry(np.array([0.0, -0.75, 0.0]), 0.295, 0.0, +1, False),
    WheelGeometry(np.array([0.0, 0.75, 0.0]), 0.295, 0.0, -1, False),
]
straight = [WheelCommandState(10.0), WheelCommandState(10.0)]
turning = [WheelCommandState(10.0), WheelCommandState(8.0)]
print("\nforward kinematics (vx, vy, yaw rate):")
print("  equal speeds:       ", forward_kinematics(rear, straight))
print("  differential speeds:", forward_kinematics(rear, turning))

###############################################################################
# Inverse kinematics closes the loop: from a body velocity, the steering
# angle and rolling speed of a front wheel follow directly.

front = WheelGeometry(np.array([2.62, -0.73, 0.0]), 0.295, 0.0, +1, True)
v_b = np.array([5.0, 0.0, 0.0])
yaw_rate = 0.25
beta = inverse_kinematics_steering(v_b, yaw_rate, front)
omega = inverse_kinematics_speed(v_b, yaw_rate, beta, front)
print(f"\nfront wheel at 5 m/s, 0.25 rad/s turn: steering {beta:.4f} rad, rolling {omega:.3f} rad/s")

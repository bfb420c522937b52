"""Sensing and control stack for an amphibious legged robot testbed.

Modules
-------
magnetics   dipole flux models, closed-form and numeric inversions, smoothing
calibration polynomial force/torque mapping and the bench-jig simulator
cpg         phase-oscillator gait network and the gait transition controller
busring     masterless sensor ring timing simulator and codec
plant       synthetic robot kinematics, elastic sensing, scenario runner
harness     command-line entry points, trace metrics, SVG plotting
"""

__version__ = "0.1.0"

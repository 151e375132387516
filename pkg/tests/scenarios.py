"""Small scripted scenarios shared by the unit and acceptance tests."""

from siwvanet.aodv import AodvConfig
from siwvanet.mobility import load_trace, static_trace
from siwvanet.network import Simulation
from siwvanet.phy import RadioConfig
from siwvanet.siw_design import AntennaSpec, Pattern
from siwvanet.traffic import CbrFlow

# 250 m two-ray range: the classic calibration with 0 dBi antennas
UNIT_GAIN_RADIO = RadioConfig(antenna=AntennaSpec(gain_dbi=0.0, pattern=Pattern.ISOTROPIC_GAIN))

# Node 1 relays 0 -> 2 until it drives off at t = 60 s; node 3 takes its
# place one second later. 0 and 2 are 400 m apart, out of direct range.
PARTITION_TRACE = """\
# relay handover scenario
bounds 820 620
0 0 10 300
0 1 210 300
0 2 410 300
0 3 700 600
60 1 210 300
61 1 210 600
60 3 700 600
61 3 210 310
"""
BREAK_TIME = 60.0


def single_hop(duration=60.0, distance=100.0, seed=1, start=0.0):
    trace = static_trace({0: (10.0, 10.0), 1: (10.0 + distance, 10.0)}, 820, 620)
    flow = CbrFlow(0, 1, start, duration)
    return Simulation(trace, [flow], duration, seed, UNIT_GAIN_RADIO)


def chain(n=3, spacing=200.0, duration=30.0, seed=1, routing=None):
    trace = static_trace({i: (10.0 + i * spacing, 300.0) for i in range(n)}, 820, 620)
    flow = CbrFlow(0, n - 1, 1.0, duration)
    return Simulation(trace, [flow], duration, seed, UNIT_GAIN_RADIO, routing=routing or AodvConfig())


def partition(duration=120.0, seed=1):
    trace = load_trace(PARTITION_TRACE)
    flow = CbrFlow(0, 2, 1.0, duration - 1.0)
    return Simulation(trace, [flow], duration, seed, UNIT_GAIN_RADIO)

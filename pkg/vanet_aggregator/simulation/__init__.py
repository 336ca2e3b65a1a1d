"""
Simulation of the aggregation protocol on a road strip.
The engine lives in ``vanet_aggregator.simulation.engine``.
"""

# Computational engines
from .char_group import CharacterGroup, build_group
from .theta_engine import ThetaValue, ThetaBatch, theta_direct, theta_batch
from .sieve_sets import IntegerSet, rough_set, make_family
from .gcd_energy import EnergyReport, gcd_sum_fast, energy_report
from .mollifier_moments import MollifierSpec, MomentReport, build_mollifier, nonvanishing_census

__all__ = [
    'CharacterGroup',
    'build_group',
    'ThetaValue',
    'ThetaBatch',
    'theta_direct',
    'theta_batch',
    'IntegerSet',
    'rough_set',
    'make_family',
    'EnergyReport',
    'gcd_sum_fast',
    'energy_report',
    'MollifierSpec',
    'MomentReport',
    'build_mollifier',
    'nonvanishing_census',
]

"""smbfree: entropy equipartition along geodesics and random walks in free groups.

A library for numerically verifying Shannon-McMillan-Breiman style
equipartition: exact free-group arithmetic, boundary rays under the
uniform-subdivision measure, group-valued cocycles, p.m.p. action models
with exact atom-measure queries, information functions of refined
partitions, and orbital/Rokhlin entropy estimators.
"""

from .words import (ReducedWord, identity, inverse, multiply, parse_word,
                    reduce, word_length, word_str)
from .boundary import (GeodesicSets, RayPrefix, RwTrajectory, StepDistribution,
                       TwoSidedWindow, geodesic_cocycle, inverse_segment_sets,
                       ray_cylinder_prob, sample_ray, sample_rw_trajectory,
                       sample_window, segment_sets, shift_ray)
from .actions import (BernoulliModel, FiniteModel, ZFactorModel, act,
                      coordinate_set, sample_point)
from .measure import (EntropyEstimate, PartitionSpec, RefinedAtom, atom_of,
                      atom_measure_bruteforce, atom_measure_exact,
                      conditional_entropy, conditional_information,
                      coordinate_partition, dist_entropy, information,
                      join_entropy, parity_partition, shannon_entropy,
                      table_partition, finite_partition, window_tuple_partition)
from .smb import (InfoSequence, SkewSystem, cesaro_identity_check,
                  conditional_entropy_profile, conditional_limit_sequence,
                  fibrewise_entropy, fibrewise_entropy_sequence, info_sequence,
                  maximal_inequality_check, orbital_entropy_estimate,
                  rokhlin_search, rw_experiment, seward_bound, sphere_average)

__version__ = "0.1.0"

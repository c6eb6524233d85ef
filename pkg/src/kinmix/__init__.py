"""Multispecies BGK gas mixtures on discrete velocity grids with telescopic projective integration."""
from .collision import bgk_rhs, equilibrium_projection
from .grid import (DistributionField, MixtureParams, SpatialGrid, VelocityGrid, build_velocity_grid,
                   cfl_max_step, flatten_index, shape_of)
from .integrate import (BlowupError, IntegratorLadder, SemiDiscreteOperator, efficiency_factor,
                        forward_euler_step, pfe_step, run_simulation, tpfe_step)
from .moments import (DegenerateMomentsError, discrete_maxwellian, entropy, maxwellian_eval,
                      mixture_pair_moments, species_moments, total_moments)
from .transport import BoundarySpec, InfluxState, transport_rhs, upwind_flux

__version__ = "0.1.0"

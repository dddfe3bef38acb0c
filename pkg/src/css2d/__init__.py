"""Pseudo-spectral simulator and verification lab for the Chern-Simons
gauged O(3) sigma model on a periodic 2D domain under the Lorenz gauge."""

from .spectral import Grid
from .fields import State, vacuum_state, n3_cross, metric_sign, covariant_derivative, curvature
from .nullforms import (q0, qij, q0j, advection_direct, advection_nullform,
                        manufactured_lorenz_state)
from .dynamics import (compute_G, compute_H, rhs_first_order, step_rk4, step_trig,
                       evolve, picard_iterate, Trajectory, PicardReport,
                       StepUnstable, NotContracting)
from .initdata import FreeData, make_matter, make_gauge, make_state, preset, preset_state
from .diagnostics import (DiagnosticsRecord, SpacetimeField, energy, constraint_residuals,
                          make_record, hsb_norm, scaling_check, WindowTooShort,
                          IncompatibleGrid)
from .estimates import (ExponentMatrix, NullformExponents, product_conditions,
                        nullform_conditions, standard_instantiations, empirical_ratio)
from .config import RunConfig, parse_config, load_config, ConfigError
from .snapshots import write_snapshot, read_snapshot, SnapshotError

__version__ = "0.1.0"

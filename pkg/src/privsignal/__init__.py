"""Revenue of selling with private versus public seller signals.

Discrete single-buyer instances with a seller signal, closed-form gap
mechanisms, exact LP solves, Lagrangian upper bounds and the lookahead
auction for correlated bidders.
"""

__version__ = "0.1.0"

from .core import (Mode, ValueGrid, DiscreteDist, SignalPricingInstance, build_instance, erd_grid,
                   example1_instance, example2_instance, regularity_audit, joint_regularity_audit,
                   is_jointly_regular, mixture_instance, virtual_values)
from .modes import ConstraintMode, IC, IR, Payments, DEFAULT_MODE
from .pricing import drev, optimal_posted_price
from .mechanisms import Mechanism, audit_mechanism, example1_mechanism, example2_mechanism
from .lp_engine import LpSolution, solve_single_buyer, solve_multi_bidder
from .duality import gh_fields, lagrangian_bound, evaluate_lagrangian, canonical_weights, lambda_star
from .auctions import MultiBidderInstance, MultiMechanism, lookahead_auction, lift_two_bidders, second_price_revenue
from .generators import random_regular_instance

__all__ = [name for name in dir() if not name.startswith("_")]

"""Empirical privacy and approximate-truthfulness auditing for deterministic
Bayesian mechanisms: histogram, two-alternative and social-welfare families,
with exact enumeration on small finite instances and reproducible Monte
Carlo everywhere else."""

__version__ = "0.1.0"

from .env import (  # noqa: F401
    BoundedDensity,
    Categorical,
    ConfigError,
    DomainError,
    Environment,
    FiniteSpace,
    IdentityFn,
    IntervalSpace,
    LinearFn,
    PiecewiseLinearFn,
    TableFn,
    TableUtility,
    TruncatedStdNormal,
    TwoAltFromFunction,
    ValuationGridSpace,
    ValuationIdentity,
    WeightedAdditive,
    ZeroFn,
    evaluate_utility,
    sample_profile,
    sample_type,
    tent_density,
    truncated_normal_sample,
)
from .mechanisms import (  # noqa: F401
    AverageWelfareChooser,
    ConstantChooser,
    HistogramMechanism,
    IntervalPartition,
    LabelPartition,
    PluralityChooser,
    SingletonMaxWelfareChooser,
    SocialWelfareMechanism,
    TopKWelfareChooser,
    TwoAltMechanism,
    WeightMatrix,
    histogram_of,
    plurality_winner,
    run_mechanism,
    select_max_welfare,
    social_welfare_vector,
    two_alt_score,
)
from .privacy import (  # noqa: F401
    AdversaryConfig,
    BudgetExceeded,
    DistributionEngine,
    OutputDistribution,
    PrivacyParams,
    PrivacyReport,
    approx_max_divergence,
    audit_bdp,
    audit_group_bdp,
    delta_at_epsilon,
    exact_output_distribution,
    group_privacy_transform,
    mc_output_distribution,
    multinomial_pmf,
    statistical_distance,
)
from .bounds import (  # noqa: F401
    histogram_privacy_bound,
    sw_privacy_bound,
    two_alt_privacy_bound,
)
from .truthfulness import (  # noqa: F401
    DeviationScenario,
    TruthfulnessReport,
    best_coalition_deviation_gain,
    best_individual_deviation_gain,
    check_truthfulness,
    expected_utility,
    truthfulness_bound_from_privacy,
    verify_theorem1,
)
from .deterrent import (  # noqa: F401
    DeterrentScheme,
    VerificationVector,
    audit_with_deterrent,
    deterrent_sufficiency,
    expected_fine,
    payments,
    sample_verifications,
)
from .streams import RandomStream  # noqa: F401
from .config import ScenarioConfig, parse_config  # noqa: F401
from .scenarios import builtin_scenario, build_instance  # noqa: F401
from .report import ReportDocument, emit_report, run_scenario  # noqa: F401

"""hyerslab: numerical verification of fuzzy stability for an affine
functional equation.

The toolkit implements fuzzy normed spaces with a sampled axiom checker,
the defect operator of the equation

    f(3x+y+z) + f(x+3y+z) + f(x+y+3z) + f(x) + f(y) + f(z) = 6 f(x+y+z),

direct-method extraction of the affine approximant A(x) = lim f(3^n x)/3^n
with certified geometric error bounds, generators for test functions with
machine-checkable perturbation budgets, and a batch CLI that turns JSON
experiment configs into reproducible JSON reports.
"""

__version__ = "0.1.0"

from .errors import (BudgetViolationError, ConfigError, DivergentSeriesError,
                     InputDomainError, IterationOverflowError,
                     NonConvergedError)
from .functional_eq import (AffineDecomposition, CheckResult,
                            PerturbationBudget, SolutionCheck,
                            SubstitutionReport, TestFunction, TripleSample,
                            affine_decompose, check_solution, eval_D,
                            eval_D_many, standard_triples, substitution_suite)
from .fuzzy_norm import (AxiomReport, CrispInduced, CustomNorm, Indicator,
                         QuadraticRatio, SamplePlan, as_point, check_axioms,
                         crisp_norm, eval_norm, fuzzy_cauchy_test,
                         fuzzy_limit_test, membership_threshold, random_plan,
                         standard_plan)
from .hyers import (Constant, CustomControl, ExtractionResult, PowerSum,
                    SeriesValue, StoppingRule, control_phi, control_phi_many,
                    corollary53_suite, extract_affine, geometric_t_grid,
                    hyers_iterate, phi_tilde, phi_tilde_partial,
                    stage_error_bound, uniqueness_probe,
                    verify_bound_nonuniform, verify_bound_uniform,
                    verify_hypothesis_nonuniform, verify_uniform_limit)
from .perturb import (CertifiedPerturbation, ConstantOffset, PowerGrowth,
                      SineBounded, Violator, make_affine,
                      make_perturbed_affine, make_violator)

from .stablemath import (DomainError, logsumexp, logmeanexp, log_softmax, softmax,
                         log_sigmoid, log_one_minus_sigmoid, sigmoid, log_softmax_complement)
from .densities import (RescaleKind, NormalisationKind, OneHot, one_hot,
                        log_conditional, log_binary_conditional, log_marginal,
                        log_partition_scaled, log_normalised_density, cosine_score)
from .oracles import (OracleError, DiscreteJoint, exact_mi, exact_kld, exact_jsd,
                      ba_bound, twin_bound, optimal_discriminator, kld_from_discriminator,
                      jsd_from_discriminator, kld_via_discriminator, bound_order_record)

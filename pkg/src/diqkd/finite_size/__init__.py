from .keylength import (Affine, EpsilonLedger, FiniteSizeInputs, KeyLengthTerms, TradeoffStats,
                        asymptotic_rate, g_of_w, noise_threshold, key_length_collective, key_length_general,
                        key_length_general_raw, key_length_general_terms, key_length_optcoll,
                        key_length_preshared, key_length_preshared_raw, lin_in_w, make_g, make_g_tilde,
                        tradeoff_stats, v_and_k)
from .optimize import OptResult, min_positive_n, optimize_params
from .stats import binom_cdf, chernoff_pe, completeness_pe_general, estimation_aborts, zs_bound

#pragma once

#include <lapacke.h>

namespace lowrankseg::detail {

// LAPACKE entry points resolved at first use. Loading is deferred so that
// OPENBLAS_CORETYPE can be pinned before OpenBLAS reads it: OpenBLAS 0.3.20
// selects its Cooperlake kernels on CPUs with AVX512-BF16 and those return
// wrong dsyevd/dgesdd results on Sapphire Rapids class hardware. An explicit
// OPENBLAS_CORETYPE in the environment is left untouched.
//
// LOWRANKSEG_LAPACKE overrides the library name (default liblapacke.so.3).
struct Lapacke {
  decltype(&LAPACKE_dsyevd) dsyevd = nullptr;
  decltype(&LAPACKE_dgesdd) dgesdd = nullptr;
};

/// Throws NumericalError if the library or a symbol cannot be loaded.
const Lapacke& lapacke();

}  // namespace lowrankseg::detail

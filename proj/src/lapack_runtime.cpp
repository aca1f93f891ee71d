#include "lapack_runtime.hpp"

#include "lowrankseg/linalg.hpp"

#include <dlfcn.h>

#include <cstdlib>
#include <mutex>
#include <string>

namespace lowrankseg::detail {

namespace {

void pin_openblas_core() {
#if defined(__x86_64__) && defined(__GNUC__)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx512bf16")) {
    ::setenv("OPENBLAS_CORETYPE", "SkylakeX", /*overwrite=*/0);
  }
#endif
}

template <class Fn>
Fn resolve(void* handle, const char* name) {
  void* sym = ::dlsym(handle, name);
  if (sym == nullptr) {
    throw NumericalError(std::string("LAPACKE symbol not found: ") + name);
  }
  return reinterpret_cast<Fn>(sym);
}

Lapacke load() {
  pin_openblas_core();
  const char* override_name = std::getenv("LOWRANKSEG_LAPACKE");
  const std::string name = override_name != nullptr ? override_name : "liblapacke.so.3";
  void* handle = ::dlopen(name.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (handle == nullptr) {
    const char* why = ::dlerror();
    throw NumericalError("cannot load " + name + ": " + (why ? why : "unknown error"));
  }
  Lapacke api;
  api.dsyevd = resolve<decltype(api.dsyevd)>(handle, "LAPACKE_dsyevd");
  api.dgesdd = resolve<decltype(api.dgesdd)>(handle, "LAPACKE_dgesdd");
  return api;
}

}  // namespace

const Lapacke& lapacke() {
  static std::once_flag once;
  static Lapacke api;
  std::call_once(once, [] { api = load(); });
  return api;
}

}  // namespace lowrankseg::detail

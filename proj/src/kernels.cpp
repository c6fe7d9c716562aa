#include "matnet/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace matnet::kernels {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(MATNET_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(MATNET_HAVE_NEON)
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& select() {
  if (const char* env = std::getenv("MATNET_KERNELS")) {
    const std::string want(env);
    for (Isa isa : available_isas())
      if (isa_name(isa) == want) return table_for(isa);
    if (!want.empty() && want != "auto")
      throw std::invalid_argument("MATNET_KERNELS=" + want + " is not available on this machine");
  }
  const auto isas = available_isas();
  return table_for(isas.back());
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::Scalar};
  for (Isa isa : {Isa::Avx2, Isa::Neon})
    if (cpu_supports(isa)) out.push_back(isa);
  return out;
}

const KernelTable& table_for(Isa isa) {
  if (!cpu_supports(isa)) throw std::invalid_argument("kernel ISA not available: " + std::string(isa_name(isa)));
  switch (isa) {
    case Isa::Scalar:
      return detail::scalar_table();
#if defined(MATNET_HAVE_AVX2)
    case Isa::Avx2:
      return detail::avx2_table();
#endif
#if defined(MATNET_HAVE_NEON)
    case Isa::Neon:
      return detail::neon_table();
#endif
    default:
      break;
  }
  throw std::invalid_argument("kernel ISA not compiled in: " + std::string(isa_name(isa)));
}

const KernelTable& active() {
  static const KernelTable& t = select();
  return t;
}

}  // namespace matnet::kernels

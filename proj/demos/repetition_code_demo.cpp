// Logical error after 17 rounds of majority-vote correction with atom loss.

#include <cstdio>

#include "atomreg/repetition_code.hpp"

int main() {
  using namespace atomreg;
  for (int d : {1, 3, 5}) {
    CodeConfig cfg;
    cfg.distance = d;
    const auto curve = logical_error_vs_time(cfg, 50000, 7, static_cast<std::uint64_t>(d), 0);
    const auto life = logical_lifetime(curve);
    std::printf("d=%d  p_err(%.0f ms)=%.4f  tau=%.1f ms%s\n", d, curve.t_ms.back(),
                curve.p_err.back().mean, life.tau_ms, life.plateau_pinned ? " (plateau pinned)" : "");
  }
}

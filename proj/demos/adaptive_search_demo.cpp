// Compares search strategies on a biased register of dark atoms.

#include <cstdio>

#include "atomreg/search.hpp"

int main() {
  using namespace atomreg;
  const SearchProblem problem{16, 0.1, Placement::AtMostOneBright};
  std::printf("n = %zu, p = %.2f\n", problem.n, problem.p);
  for (auto strategy : {SearchStrategy::DeterministicSequential,
                        SearchStrategy::GlobalCheckThenSequential,
                        SearchStrategy::PartitionedBinary}) {
    double total = 0.0;
    const int trials = 20000;
    for (int i = 0; i < trials; ++i) {
      auto rng = RandomStream::for_trial(42, 0, static_cast<std::uint64_t>(i));
      const Register reg = sample_search_register(problem, rng);
      total += static_cast<double>(run_search(reg, strategy, rng).intervals_used);
    }
    std::printf("%-30s mean %.3f  closed form %.3f\n", to_string(strategy).c_str(),
                total / trials, expected_cost(problem, strategy));
  }
}

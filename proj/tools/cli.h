#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cws::cli {

/// Entry point for `cws <subcommand> ...`. Subcommands: train, segment, eval,
/// gradcheck. Data goes to `out`, progress and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

struct GradcheckOptions {
  std::uint64_t seed = 42;
  std::size_t extra_layers = 0;
  std::size_t memory_span = 0;
  std::size_t window = 1;
  bool bigram = false;
  std::size_t sentences = 2;
  std::size_t length = 3;
  double step = 1e-4;
  /// Denominator floor of the relative error. Attention parameters get
  /// gradients near 1e-9 on 3-character inputs, where central differences
  /// carry about 1e-11 of round-off.
  double floor = 1e-7;
  /// Test hook: doubles the largest analytic gradient entry before comparing.
  bool corrupt_gradient = false;
};

/// Central-difference check of the full model NLL (embeddings, BiLSTMN and
/// CRF) on synthetic data. Model: hidden 5, attention 4, embedding 6.
/// Returns the maximum relative error over all parameters.
double model_gradient_check(const GradcheckOptions& options);

inline constexpr double kGradcheckThreshold = 1e-3;

}  // namespace cws::cli

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace zdtree::verify {

struct PropertyResult {
  std::string name;
  bool passed = true;
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::string detail;  // first failure, if any
};

/// Every variant against the brute-force oracle, over all five distributions
/// and each k, for in-set queries plus `dynamic_queries` fresh points.
PropertyResult check_oracle_equivalence(std::size_t n, const std::vector<std::size_t>& ks,
                                        std::size_t dynamic_queries, std::uint64_t seed);

/// batch_insert(build(P), Q) has the same flattened leaves as build(P u Q).
PropertyResult check_build_equivalence(std::size_t n, std::size_t trials, std::uint64_t seed);

/// Inserting then deleting Q leaves query results unchanged.
PropertyResult check_update_inverse(std::size_t n, std::size_t trials, std::size_t queries,
                                    std::uint64_t seed);

/// Random mixed insert/delete rounds, validating the tree after each.
PropertyResult check_update_fuzz(std::size_t n, std::size_t rounds, std::uint64_t seed);

/// Builds over each distribution and validates. With `unsorted_input` the
/// build is fed a shuffled sequence (fault fixture) and must be caught.
PropertyResult check_build_invariants(std::size_t n, std::uint64_t seed, bool unsorted_input);

/// Random-triple checks of the Morton range property, total order, and box
/// distance agreement with a per-cell scan.
PropertyResult check_morton_properties(std::size_t trials, std::uint64_t seed);

struct VerifyConfig {
  std::size_t n = 2000;
  std::vector<std::size_t> ks{1, 5, 100};
  std::size_t dynamic_queries = 200;
  std::size_t equivalence_trials = 10;
  std::size_t inverse_trials = 5;
  std::size_t fuzz_n = 20000;
  std::size_t fuzz_rounds = 50;
  std::size_t morton_trials = 100000;
  std::uint64_t seed = 0;
  bool inject_unsorted_build = false;
};

std::vector<PropertyResult> run_verify(const VerifyConfig& config);

}  // namespace zdtree::verify

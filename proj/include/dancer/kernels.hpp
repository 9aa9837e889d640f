#pragma once

// Data-parallel inner loops. Every kernel has a straightforward serial
// reference in `serial` and an OpenMP version in `parallel`; the two must
// return identical results (tests compare them, bench/ times them).
// Parallel kernels only fill per-index slots and reduce serially, so their
// output never depends on the thread count.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "dancer/entity_store.hpp"
#include "dancer/phonetics.hpp"

namespace dancer::kernels {

// Ranked (row, score) pair used by top-k selection.
struct Scored {
  std::size_t index;
  double score;
};

// Sorts by score descending, then index ascending; keeps the first k.
std::vector<Scored> select_top_k(std::vector<double> scores, std::size_t k);

namespace serial {

// SIM(query, entity.phonetic) for every entity.
std::vector<double> similarity_scan(const PhoneticSequence& query, std::span<const Entity> entities);

// rows is count x dim, row-major.
std::vector<double> inner_product_scan(std::span<const float> rows, std::size_t dim, std::span<const double> query);

// Compares every pair directly.
std::vector<EntityPair> homophone_pairs(std::span<const Entity> entities);

}  // namespace serial

namespace parallel {

std::vector<double> similarity_scan(const PhoneticSequence& query, std::span<const Entity> entities);

std::vector<double> inner_product_scan(std::span<const float> rows, std::size_t dim, std::span<const double> query);

// Buckets by (length, sorted syllable multiset) and compares inside buckets.
std::vector<EntityPair> homophone_pairs(std::span<const Entity> entities);

}  // namespace parallel

// Thread count used by the parallel kernels and batch drivers (0 = runtime default).
void set_num_threads(int threads);
int num_threads();

}  // namespace dancer::kernels

#include "dancer/kernels.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dancer::kernels {

std::vector<Scored> select_top_k(std::vector<double> scores, std::size_t k) {
  std::vector<Scored> ranked(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) ranked[i] = {i, scores[i]};
  k = std::min(k, ranked.size());
  auto better = [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  };
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(), better);
  ranked.resize(k);
  return ranked;
}

namespace serial {

std::vector<double> similarity_scan(const PhoneticSequence& query, std::span<const Entity> entities) {
  std::vector<double> out(entities.size());
  for (std::size_t i = 0; i < entities.size(); ++i) out[i] = similarity(entities[i].phonetic, query);
  return out;
}

std::vector<double> inner_product_scan(std::span<const float> rows, std::size_t dim, std::span<const double> query) {
  if (query.size() != dim) throw std::invalid_argument("query dimension mismatch");
  const std::size_t count = dim == 0 ? 0 : rows.size() / dim;
  std::vector<double> out(count, 0.0);
  for (std::size_t r = 0; r < count; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) acc += static_cast<double>(rows[r * dim + c]) * query[c];
    out[r] = acc;
  }
  return out;
}

std::vector<EntityPair> homophone_pairs(std::span<const Entity> entities) {
  std::vector<EntityPair> out;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    for (std::size_t j = i + 1; j < entities.size(); ++j) {
      if (entities[i].surface != entities[j].surface &&
          similarity(entities[i].phonetic, entities[j].phonetic) == 1.0) {
        out.emplace_back(entities[i].id, entities[j].id);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<double> similarity_scan(const PhoneticSequence& query, std::span<const Entity> entities) {
  std::vector<double> out(entities.size());
  const auto n = static_cast<std::ptrdiff_t>(entities.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = similarity(entities[i].phonetic, query);
  return out;
}

std::vector<double> inner_product_scan(std::span<const float> rows, std::size_t dim, std::span<const double> query) {
  if (query.size() != dim) throw std::invalid_argument("query dimension mismatch");
  const std::size_t count = dim == 0 ? 0 : rows.size() / dim;
  std::vector<double> out(count, 0.0);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const float* row = rows.data() + static_cast<std::size_t>(r) * dim;
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) acc += static_cast<double>(row[c]) * query[c];
    out[r] = acc;
  }
  return out;
}

std::vector<EntityPair> homophone_pairs(std::span<const Entity> entities) {
  // Identical sequences necessarily share length and syllable multiset.
  std::map<std::vector<std::string>, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    auto key = entities[i].phonetic.syllables;
    std::sort(key.begin(), key.end());
    buckets[std::move(key)].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [key, members] : buckets) {
    if (members.size() > 1) groups.push_back(&members);
  }

  std::vector<std::vector<EntityPair>> found(groups.size());
  const auto n = static_cast<std::ptrdiff_t>(groups.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t g = 0; g < n; ++g) {
    const auto& members = *groups[g];
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const Entity& x = entities[members[a]];
        const Entity& y = entities[members[b]];
        if (x.surface != y.surface && x.phonetic == y.phonetic) {
          found[g].emplace_back(std::min(x.id, y.id), std::max(x.id, y.id));
        }
      }
    }
  }
  std::vector<EntityPair> out;
  for (auto& part : found) out.insert(out.end(), part.begin(), part.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace parallel

void set_num_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

int num_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace dancer::kernels

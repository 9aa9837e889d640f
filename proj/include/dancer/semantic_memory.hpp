#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dancer/alignment.hpp"
#include "dancer/entity_store.hpp"

namespace dancer {

inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kSpanStartToken = "[ES]";
inline constexpr std::string_view kSpanEndToken = "[EE]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";

bool is_special_token(std::string_view token) noexcept;

// A token is either one UTF-8 character or one of the bracketed specials.
using TokenSequence = std::vector<std::string>;

std::string join_tokens(const TokenSequence& tokens);

struct ContextOrigin {
  std::string utt_id;
  std::size_t span_index = 0;
  auto operator<=>(const ContextOrigin&) const = default;
};

// Hypothesis with one corrupted span replaced by [MASK] tokens, optionally
// bracketed by [ES]/[EE].
struct MaskedContext {
  TokenSequence tokens;
  std::size_t span_len = 0;
  ContextOrigin origin;

  std::string text() const { return join_tokens(tokens); }
  bool has_markers() const;
};

MaskedContext mask_span(std::u32string_view hypothesis, Range span, ContextOrigin origin = {});
MaskedContext insert_markers(const MaskedContext& masked);

// `[CLS] surface [SEP] description [SEP]`; literal control tokens inside the
// description are dropped.
TokenSequence entity_input(std::string_view surface, std::string_view description);

using EmbeddingVector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
void l2_normalize(std::span<double> v);

// Linear map from [h_s; h_e] (2d) to d, row-major d x 2d.
struct SpanEncoderWeights {
  std::size_t dim = 0;
  std::vector<double> values;

  double at(std::size_t row, std::size_t col) const { return values[row * 2 * dim + col]; }
};

EmbeddingVector span_encode(std::span<const double> h_start, std::span<const double> h_end, const SpanEncoderWeights& w);

// Numerically stable softmax (max subtracted).
std::vector<double> softmax(std::span<const double> logits);

struct ScoredEntity {
  EntityId id;
  double value;
};

// Softmax over context . candidate dot products, restricted to the given
// candidates. Throws on an empty set or a dimension mismatch.
std::vector<ScoredEntity> semantic_distribution(std::span<const double> context,
                                                const std::vector<std::pair<EntityId, EmbeddingVector>>& candidates);

// Dense row-major matrix used for embedding batches.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// In-batch contrastive loss: mean over i of -log softmax_i(context_i . entity_j)[j = i].
double infonce_loss(const Matrix& contexts, const Matrix& entities);

struct InfoNceGradient {
  double loss = 0.0;
  Matrix d_contexts;
  Matrix d_entities;
};
InfoNceGradient infonce_gradient(const Matrix& contexts, const Matrix& entities);

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Entity-description embeddings, one row per entity, searched exactly.
class EmbeddingMemory {
 public:
  EmbeddingMemory() = default;
  explicit EmbeddingMemory(std::size_t dim) : dim_(dim) {}

  void add(EntityId id, std::string surface, std::span<const double> vector);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::span<const float> rows() const noexcept { return rows_; }
  std::span<const float> row(std::size_t r) const { return {rows_.data() + r * dim_, dim_}; }
  EntityId id(std::size_t r) const { return ids_.at(r); }
  const std::string& surface(std::size_t r) const { return surfaces_.at(r); }

  std::optional<std::size_t> row_of(EntityId id) const;
  EmbeddingVector vector(std::size_t r) const;

  // Re-keys rows to catalog ids by surface. Throws NotFoundError for
  // surfaces the catalog does not contain.
  void bind(const EntityCatalog& catalog);
  void normalize_rows();

  bool operator==(const EmbeddingMemory& o) const {
    return dim_ == o.dim_ && rows_ == o.rows_ && ids_ == o.ids_ && surfaces_ == o.surfaces_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<float> rows_;
  std::vector<EntityId> ids_;
  std::vector<std::string> surfaces_;
  std::unordered_map<EntityId, std::size_t> row_by_id_;
};

EmbeddingMemory build_memory(const EntityCatalog& catalog, const std::vector<std::pair<EntityId, EmbeddingVector>>& vectors);

// EDAM v1, little-endian: "EDAM", u32 version, u32 count, u32 dim, then per
// row u16 surface length, surface bytes, dim x f32.
void save_memory(const EmbeddingMemory& memory, std::ostream& out);
// Rows come back keyed 0..count-1; call bind() to map them to a catalog.
EmbeddingMemory load_memory(std::istream& in);

// Exact top-k by inner product; ties go to the lower entity id; k > size returns all.
std::vector<ScoredEntity> topk_inner_product(const EmbeddingMemory& memory, std::span<const double> query, std::size_t k);

// Deterministic stand-in encoder: hashed character 1/2/3-gram counts folded
// into `dim` buckets, L2-normalized. Special tokens are skipped and break
// n-grams.
EmbeddingVector reference_embed(const TokenSequence& tokens, std::size_t dim, std::uint64_t seed);

// Bucket index used by reference_embed for one n-gram (exposed for tests).
std::size_t ngram_bucket(std::string_view ngram_utf8, std::size_t dim, std::uint64_t seed);

// Context vectors produced by an external encoder, keyed by (utt_id, span_index).
using ContextVectorTable = std::map<ContextOrigin, EmbeddingVector>;
ContextVectorTable load_context_vectors(std::istream& jsonl, std::size_t expected_dim = 0);

}  // namespace dancer

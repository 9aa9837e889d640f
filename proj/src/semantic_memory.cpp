#include "dancer/semantic_memory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dancer/kernels.hpp"
#include "dancer/utf8.hpp"

namespace dancer {

bool is_special_token(std::string_view token) noexcept {
  return token == kMaskToken || token == kSpanStartToken || token == kSpanEndToken || token == kClsToken ||
         token == kSepToken;
}

std::string join_tokens(const TokenSequence& tokens) {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

bool MaskedContext::has_markers() const {
  return std::any_of(tokens.begin(), tokens.end(),
                     [](const std::string& t) { return t == kSpanStartToken || t == kSpanEndToken; });
}

MaskedContext mask_span(std::u32string_view hypothesis, Range span, ContextOrigin origin) {
  if (span.start >= span.end || span.end > hypothesis.size()) {
    throw std::invalid_argument("mask_span: span must be non-empty and inside the hypothesis");
  }
  MaskedContext out;
  out.origin = std::move(origin);
  out.span_len = span.length();
  out.tokens.reserve(hypothesis.size());
  for (std::size_t i = 0; i < hypothesis.size(); ++i) {
    if (i >= span.start && i < span.end) {
      out.tokens.emplace_back(kMaskToken);
    } else {
      out.tokens.push_back(utf8_encode(hypothesis[i]));
    }
  }
  return out;
}

MaskedContext insert_markers(const MaskedContext& masked) {
  if (masked.has_markers()) throw std::invalid_argument("insert_markers: context already carries [ES]/[EE]");
  const auto first = std::find(masked.tokens.begin(), masked.tokens.end(), kMaskToken);
  if (first == masked.tokens.end()) throw std::invalid_argument("insert_markers: no [MASK] run");
  const auto begin = static_cast<std::size_t>(first - masked.tokens.begin());
  const std::size_t end = begin + masked.span_len;
  if (end > masked.tokens.size()) throw std::invalid_argument("insert_markers: mask run shorter than span_len");
  for (std::size_t i = begin; i < end; ++i) {
    if (masked.tokens[i] != kMaskToken) throw std::invalid_argument("insert_markers: mask run is not contiguous");
  }

  MaskedContext out = masked;
  out.tokens.clear();
  out.tokens.reserve(masked.tokens.size() + 2);
  for (std::size_t i = 0; i < masked.tokens.size(); ++i) {
    if (i == begin) out.tokens.emplace_back(kSpanStartToken);
    out.tokens.push_back(masked.tokens[i]);
    if (i + 1 == end) out.tokens.emplace_back(kSpanEndToken);
  }
  return out;
}

TokenSequence entity_input(std::string_view surface, std::string_view description) {
  TokenSequence out;
  out.emplace_back(kClsToken);
  for (char32_t c : utf8_decode(surface)) out.push_back(utf8_encode(c));
  out.emplace_back(kSepToken);
  for (char32_t c : utf8_decode(strip_control_tokens(std::string(description)))) out.push_back(utf8_encode(c));
  out.emplace_back(kSepToken);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void l2_normalize(std::span<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (double& x : v) x /= norm;
}

EmbeddingVector span_encode(std::span<const double> h_start, std::span<const double> h_end, const SpanEncoderWeights& w) {
  if (h_start.size() != w.dim || h_end.size() != w.dim || w.values.size() != 2 * w.dim * w.dim) {
    throw std::invalid_argument("span_encode: dimension mismatch");
  }
  EmbeddingVector out(w.dim, 0.0);
  for (std::size_t r = 0; r < w.dim; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < w.dim; ++c) acc += w.at(r, c) * h_start[c];
    for (std::size_t c = 0; c < w.dim; ++c) acc += w.at(r, w.dim + c) * h_end[c];
    out[r] = acc;
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

std::vector<ScoredEntity> semantic_distribution(std::span<const double> context,
                                                const std::vector<std::pair<EntityId, EmbeddingVector>>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("semantic_distribution: empty candidate set");
  std::vector<double> logits;
  logits.reserve(candidates.size());
  for (const auto& [id, vec] : candidates) {
    if (vec.size() != context.size()) {
      throw std::invalid_argument("semantic_distribution: candidate " + std::to_string(id) + " has dimension " +
                                  std::to_string(vec.size()) + ", context has " + std::to_string(context.size()));
    }
    logits.push_back(dot(context, vec));
  }
  const auto probs = softmax(logits);
  std::vector<ScoredEntity> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) out.push_back({candidates[i].first, probs[i]});
  return out;
}

namespace {

void check_batches(const Matrix& contexts, const Matrix& entities) {
  if (contexts.rows != entities.rows || contexts.cols != entities.cols || contexts.rows == 0) {
    throw std::invalid_argument("infonce: batches must be non-empty and of equal shape");
  }
}

// Row-wise log-softmax of the B x B score matrix; returns (loss, probabilities).
std::pair<double, Matrix> infonce_forward(const Matrix& contexts, const Matrix& entities) {
  check_batches(contexts, entities);
  const std::size_t b = contexts.rows;
  Matrix probs(b, b);
  double loss = 0.0;
  std::vector<double> logits(b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) logits[j] = dot(contexts.row(i), entities.row(j));
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t j = 0; j < b; ++j) total += std::exp(logits[j] - top);
    const double log_norm = top + std::log(total);
    loss -= logits[i] - log_norm;
    for (std::size_t j = 0; j < b; ++j) probs(i, j) = std::exp(logits[j] - log_norm);
  }
  return {loss / static_cast<double>(b), std::move(probs)};
}

}  // namespace

double infonce_loss(const Matrix& contexts, const Matrix& entities) { return infonce_forward(contexts, entities).first; }

InfoNceGradient infonce_gradient(const Matrix& contexts, const Matrix& entities) {
  auto [loss, probs] = infonce_forward(contexts, entities);
  const std::size_t b = contexts.rows;
  const std::size_t d = contexts.cols;
  // dL/dS = (P - I) / B for S = C E^T.
  for (std::size_t i = 0; i < b; ++i) probs(i, i) -= 1.0;
  for (double& x : probs.data) x /= static_cast<double>(b);

  InfoNceGradient g{loss, Matrix(b, d), Matrix(b, d)};
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double s = probs(i, j);
      for (std::size_t k = 0; k < d; ++k) {
        g.d_contexts(i, k) += s * entities(j, k);
        g.d_entities(j, k) += s * contexts(i, k);
      }
    }
  }
  return g;
}

void EmbeddingMemory::add(EntityId id, std::string surface, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw std::invalid_argument("memory row for \"" + surface + "\" has dimension " + std::to_string(vector.size()) +
                                ", expected " + std::to_string(dim_));
  }
  if (row_by_id_.count(id) != 0) throw std::invalid_argument("duplicate entity id in memory: " + std::to_string(id));
  if (surface.size() > std::numeric_limits<std::uint16_t>::max()) throw std::invalid_argument("surface too long");
  for (double x : vector) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite component in memory row for \"" + surface + "\"");
    rows_.push_back(static_cast<float>(x));
  }
  row_by_id_.emplace(id, ids_.size());
  ids_.push_back(id);
  surfaces_.push_back(std::move(surface));
}

std::optional<std::size_t> EmbeddingMemory::row_of(EntityId id) const {
  auto it = row_by_id_.find(id);
  if (it == row_by_id_.end()) return std::nullopt;
  return it->second;
}

EmbeddingVector EmbeddingMemory::vector(std::size_t r) const {
  const auto src = row(r);
  return EmbeddingVector(src.begin(), src.end());
}

void EmbeddingMemory::bind(const EntityCatalog& catalog) {
  std::unordered_map<EntityId, std::size_t> rebound;
  for (std::size_t r = 0; r < surfaces_.size(); ++r) {
    const auto id = catalog.find(surfaces_[r]);
    if (!id) throw NotFoundError("memory row " + std::to_string(r) + " names unknown entity \"" + surfaces_[r] + "\"");
    if (!rebound.emplace(*id, r).second) throw std::invalid_argument("memory holds \"" + surfaces_[r] + "\" twice");
    ids_[r] = *id;
  }
  row_by_id_ = std::move(rebound);
}

void EmbeddingMemory::normalize_rows() {
  for (std::size_t r = 0; r < size(); ++r) {
    double norm = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) norm += static_cast<double>(rows_[r * dim_ + c]) * rows_[r * dim_ + c];
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (std::size_t c = 0; c < dim_; ++c) rows_[r * dim_ + c] = static_cast<float>(rows_[r * dim_ + c] / norm);
  }
}

EmbeddingMemory build_memory(const EntityCatalog& catalog, const std::vector<std::pair<EntityId, EmbeddingVector>>& vectors) {
  const std::size_t dim = vectors.empty() ? 0 : vectors.front().second.size();
  EmbeddingMemory memory(dim);
  for (const auto& [id, vec] : vectors) memory.add(id, catalog.at(id).surface, vec);
  return memory;
}

namespace {

constexpr char kMagic[4] = {'E', 'D', 'A', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>(v >> 24)};
  out.write(b, 4);
}

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError(std::string("EDAM: truncated ") + what);
}

std::uint16_t get_u16(std::istream& in, const char* what) {
  unsigned char b[2];
  read_exact(in, reinterpret_cast<char*>(b), 2, what);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4, what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_memory(const EmbeddingMemory& memory, std::ostream& out) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(memory.size()));
  put_u32(out, static_cast<std::uint32_t>(memory.dim()));
  for (std::size_t r = 0; r < memory.size(); ++r) {
    const auto& s = memory.surface(r);
    put_u16(out, static_cast<std::uint16_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
    for (float x : memory.row(r)) put_u32(out, std::bit_cast<std::uint32_t>(x));
  }
  if (!out) throw std::runtime_error("EDAM: write failed");
}

EmbeddingMemory load_memory(std::istream& in) {
  char magic[4];
  read_exact(in, magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("EDAM: bad magic");
  const auto version = get_u32(in, "version");
  if (version != kVersion) throw FormatError("EDAM: unsupported version " + std::to_string(version));
  const auto count = get_u32(in, "count");
  const auto dim = get_u32(in, "dim");
  EmbeddingMemory memory(dim);
  std::vector<double> row(dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto len = get_u16(in, "surface length");
    std::string surface(len, '\0');
    read_exact(in, surface.data(), len, "surface");
    if (!is_valid_utf8(surface)) throw FormatError("EDAM: row " + std::to_string(r) + " surface is not valid UTF-8");
    for (std::uint32_t c = 0; c < dim; ++c) row[c] = std::bit_cast<float>(get_u32(in, "vector"));
    try {
      memory.add(static_cast<EntityId>(r), std::move(surface), row);
    } catch (const std::invalid_argument& e) {
      throw FormatError("EDAM: row " + std::to_string(r) + ": " + e.what());
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("EDAM: trailing bytes after last row");
  return memory;
}

std::vector<ScoredEntity> topk_inner_product(const EmbeddingMemory& memory, std::span<const double> query, std::size_t k) {
  if (query.size() != memory.dim()) throw std::invalid_argument("topk_inner_product: query dimension mismatch");
  const auto scores = kernels::parallel::inner_product_scan(memory.rows(), memory.dim(), query);
  std::vector<ScoredEntity> ranked(scores.size());
  for (std::size_t r = 0; r < scores.size(); ++r) ranked[r] = {memory.id(r), scores[r]};
  k = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    [](const ScoredEntity& a, const ScoredEntity& b) {
                      if (a.value != b.value) return a.value > b.value;
                      return a.id < b.id;
                    });
  ranked.resize(k);
  return ranked;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::size_t ngram_bucket(std::string_view ngram_utf8, std::size_t dim, std::uint64_t seed) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : ngram_utf8) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return static_cast<std::size_t>(splitmix64(h ^ splitmix64(seed)) % dim);
}

EmbeddingVector reference_embed(const TokenSequence& tokens, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("reference_embed: dim must be positive");
  EmbeddingVector v(dim, 0.0);
  std::vector<std::string> run;
  auto flush = [&] {
    for (std::size_t n = 1; n <= 3; ++n) {
      for (std::size_t i = 0; i + n <= run.size(); ++i) {
        std::string gram;
        for (std::size_t j = i; j < i + n; ++j) gram += run[j];
        v[ngram_bucket(gram, dim, seed)] += 1.0;
      }
    }
    run.clear();
  };
  for (const auto& t : tokens) {
    if (is_special_token(t)) {
      flush();
    } else {
      run.push_back(t);
    }
  }
  flush();
  l2_normalize(v);
  return v;
}

ContextVectorTable load_context_vectors(std::istream& jsonl, std::size_t expected_dim) {
  ContextVectorTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(jsonl, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "context vectors line " + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!rec.contains("utt_id") || !rec["utt_id"].is_string() || !rec.contains("span_index") ||
        !rec["span_index"].is_number_unsigned() || !rec.contains("vector") || !rec["vector"].is_array()) {
      throw FormatError(where + ": expected utt_id, span_index and vector");
    }
    ContextOrigin origin{rec["utt_id"].get<std::string>(), rec["span_index"].get<std::size_t>()};
    EmbeddingVector v;
    for (const auto& x : rec["vector"]) {
      if (!x.is_number()) throw FormatError(where + ": non-numeric vector component");
      v.push_back(static_cast<double>(x.get<float>()));
    }
    if (expected_dim != 0 && v.size() != expected_dim) {
      throw FormatError(where + " (" + origin.utt_id + "): dimension " + std::to_string(v.size()) + ", expected " +
                        std::to_string(expected_dim));
    }
    if (!table.emplace(origin, std::move(v)).second) throw FormatError(where + ": duplicate (utt_id, span_index)");
  }
  return table;
}

}  // namespace dancer

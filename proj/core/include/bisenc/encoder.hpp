// Chunk-based convolutional sentence encoder: embeds a token sequence,
// convolves an h-word window with L filters, pools each feature map into C
// chunk maxima, and maps the pooled vector through dropout and two
// relu-activated linear layers to a fixed-length output. A separate linear
// projection carries that output into the shared bilingual space.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bisenc/corpus.hpp"
#include "bisenc/linalg.hpp"
#include "bisenc/serialize.hpp"

namespace bisenc {

enum class RunMode { kTrain, kInfer };

enum class ProjActivation : std::int64_t { kRelu = 0, kSigmoid = 1 };

struct ConvLayer {
  std::size_t window = 3;  // h
  Mat weights;             // L x (h * k); row l is filter l flattened
  Vec bias;                // L

  std::size_t filters() const { return weights.rows(); }
};

struct EncoderParams {
  EmbeddingTable embeddings;
  ConvLayer conv;
  std::size_t chunks = 4;  // C
  Mat fc1_w;               // out_dim x (L * C)
  Vec fc1_b;
  Mat fc2_w;               // out_dim x out_dim
  Vec fc2_b;
  Mat proj_w;              // out_dim x out_dim
  Vec proj_b;
  double dropout = 0.5;
  ProjActivation proj_activation = ProjActivation::kRelu;
  bool freeze_embeddings = false;

  std::size_t out_dim() const { return fc2_w.rows(); }
  std::size_t pooled_dim() const { return conv.filters() * chunks; }

  std::vector<ParamView> param_views();

  static EncoderParams init(const Vocabulary& vocab, std::size_t embed_dim,
                            std::size_t window, std::size_t filters, std::size_t chunks,
                            std::size_t out_dim, double dropout, Rng& rng);
};

// Everything the backward pass needs from one forward run.
struct EncoderTrace {
  std::vector<WordId> token_ids;       // real tokens only (length n)
  Mat input;                           // n' x k after padding
  Mat conv_pre;                        // L x (n' - h + 1), pre-activation
  Vec pooled;                          // L * C, layout [l * C + c]
  std::vector<std::size_t> pool_argmax;  // feature-map index per pooled slot
  Vec dropout_mask;                    // L * C, 0 or 1/(1-rate)
  Vec dropped;                         // pooled * mask
  Vec fc1_pre, fc1_out;
  Vec fc2_pre, output;                 // output = O
  Vec proj_pre, projected;             // filled by encode_projected only
  bool has_projection = false;
};

struct EncoderResult {
  Vec output;  // O (or O' for encode_projected)
  EncoderTrace trace;
};

struct PoolResult {
  Vec values;                        // length C
  std::vector<std::size_t> argmax;   // index into the feature map, first-wins
};

// Gradients, same shapes as EncoderParams.
struct EncoderGrads {
  Mat embeddings;
  Mat conv_w;
  Vec conv_b;
  Mat fc1_w;
  Vec fc1_b;
  Mat fc2_w;
  Vec fc2_b;
  Mat proj_w;
  Vec proj_b;

  static EncoderGrads zeros_like(const EncoderParams& p);
  void add(const EncoderGrads& other);
  void scale(double a);
  std::vector<ParamView> param_views();
};

// Rows are word vectors; the sentence is right-padded with zero rows so that
// the padded length is max(n, C + h - 1), which guarantees a feature map of
// length >= C.
Mat embed_sentence(const SentenceIds& sentence, const EmbeddingTable& emb,
                   std::size_t window, std::size_t chunks);

// Relu feature maps, one per filter, each of length rows(X) - h + 1.
std::vector<Vec> convolve(const Mat& input, const ConvLayer& conv);

// Splits the map into C chunks (first C-1 of size floor(len/C), the last
// absorbs the remainder) and takes each chunk's maximum. Ties keep the first
// index. Throws if len < C.
PoolResult chunk_max_pool(const Vec& feature_map, std::size_t chunks);

// (begin, end) offsets of each chunk; exposed for tests.
std::vector<std::pair<std::size_t, std::size_t>> chunk_bounds(std::size_t len,
                                                              std::size_t chunks);

// Full pipeline up to the encoder output O. Train mode applies inverted
// dropout and requires an rng; infer mode is deterministic.
EncoderResult encoder_forward(const SentenceIds& sentence, const EncoderParams& params,
                              RunMode mode, Rng* rng = nullptr);

// O' = sigma(proj_w * O + proj_b), the shared-space vector.
Vec project_shared(const Vec& output, const EncoderParams& params);

// encoder_forward followed by the shared-space projection; the trace covers
// both so gradients can flow from O'.
EncoderResult encode_projected(const SentenceIds& sentence, const EncoderParams& params,
                               RunMode mode, Rng* rng = nullptr);

// Accumulates gradients for every parameter group (including embeddings)
// given the gradient of some loss with respect to O'. The trace must come
// from encode_projected on the same parameters.
void encoder_backward(const EncoderParams& params, const EncoderTrace& trace,
                      const Vec& grad_projected, EncoderGrads& acc);

// Same, entered at O (skips the projection group).
void encoder_backward_from_output(const EncoderParams& params, const EncoderTrace& trace,
                                  const Vec& grad_output, EncoderGrads& acc);

void save_encoder(const EncoderParams& params, const std::string& path);
EncoderParams load_encoder(const std::string& path);

// Prefix-scoped (de)serialization so a container can hold several encoders.
void encoder_to_snapshot(const EncoderParams& params, const std::string& prefix,
                         Snapshot& snap);
EncoderParams encoder_from_snapshot(const Snapshot& snap, const std::string& prefix);

}  // namespace bisenc

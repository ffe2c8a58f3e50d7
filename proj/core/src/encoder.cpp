#include "bisenc/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace bisenc {

namespace {

double apply_proj_activation(double x, ProjActivation act) {
  switch (act) {
    case ProjActivation::kRelu:
      return x > 0.0 ? x : 0.0;
    case ProjActivation::kSigmoid:
      return 1.0 / (1.0 + std::exp(-x));
  }
  throw std::logic_error("unknown projection activation");
}

// d(activation)/d(pre) given pre- and post-activation values.
double proj_activation_grad(double pre, double post, ProjActivation act) {
  switch (act) {
    case ProjActivation::kRelu:
      return pre > 0.0 ? 1.0 : 0.0;
    case ProjActivation::kSigmoid:
      return post * (1.0 - post);
  }
  throw std::logic_error("unknown projection activation");
}

}  // namespace

std::vector<ParamView> EncoderParams::param_views() {
  return {
      {"embeddings", embeddings.table.data(), embeddings.table.size()},
      {"conv.w", conv.weights.data(), conv.weights.size()},
      {"conv.b", conv.bias.data(), conv.bias.size()},
      {"fc1.w", fc1_w.data(), fc1_w.size()},
      {"fc1.b", fc1_b.data(), fc1_b.size()},
      {"fc2.w", fc2_w.data(), fc2_w.size()},
      {"fc2.b", fc2_b.data(), fc2_b.size()},
      {"proj.w", proj_w.data(), proj_w.size()},
      {"proj.b", proj_b.data(), proj_b.size()},
  };
}

EncoderParams EncoderParams::init(const Vocabulary& vocab, std::size_t embed_dim,
                                  std::size_t window, std::size_t filters,
                                  std::size_t chunks, std::size_t out_dim, double dropout,
                                  Rng& rng) {
  if (window == 0 || filters == 0 || chunks == 0 || out_dim == 0)
    throw std::invalid_argument("encoder init: all dims must be positive");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("encoder init: dropout must be in [0, 1)");
  EncoderParams p;
  p.embeddings = random_embedding_table(vocab, embed_dim, rng);
  p.conv.window = window;
  p.conv.weights = xavier_init(filters, window * embed_dim, rng);
  p.conv.bias = Vec(filters, 0.0);
  p.chunks = chunks;
  p.fc1_w = xavier_init(out_dim, filters * chunks, rng);
  p.fc1_b = Vec(out_dim, 0.0);
  p.fc2_w = xavier_init(out_dim, out_dim, rng);
  p.fc2_b = Vec(out_dim, 0.0);
  p.proj_w = xavier_init(out_dim, out_dim, rng);
  p.proj_b = Vec(out_dim, 0.0);
  p.dropout = dropout;
  return p;
}

EncoderGrads EncoderGrads::zeros_like(const EncoderParams& p) {
  EncoderGrads g;
  g.embeddings = Mat(p.embeddings.table.rows(), p.embeddings.table.cols());
  g.conv_w = Mat(p.conv.weights.rows(), p.conv.weights.cols());
  g.conv_b = Vec(p.conv.bias.size(), 0.0);
  g.fc1_w = Mat(p.fc1_w.rows(), p.fc1_w.cols());
  g.fc1_b = Vec(p.fc1_b.size(), 0.0);
  g.fc2_w = Mat(p.fc2_w.rows(), p.fc2_w.cols());
  g.fc2_b = Vec(p.fc2_b.size(), 0.0);
  g.proj_w = Mat(p.proj_w.rows(), p.proj_w.cols());
  g.proj_b = Vec(p.proj_b.size(), 0.0);
  return g;
}

void EncoderGrads::add(const EncoderGrads& o) {
  auto mine = param_views();
  auto theirs = const_cast<EncoderGrads&>(o).param_views();
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].size != theirs[i].size) throw std::invalid_argument("grads: shape mismatch");
    for (std::size_t k = 0; k < mine[i].size; ++k) mine[i].data[k] += theirs[i].data[k];
  }
}

void EncoderGrads::scale(double a) {
  for (auto& view : param_views())
    for (std::size_t k = 0; k < view.size; ++k) view.data[k] *= a;
}

std::vector<ParamView> EncoderGrads::param_views() {
  return {
      {"embeddings", embeddings.data(), embeddings.size()},
      {"conv.w", conv_w.data(), conv_w.size()},
      {"conv.b", conv_b.data(), conv_b.size()},
      {"fc1.w", fc1_w.data(), fc1_w.size()},
      {"fc1.b", fc1_b.data(), fc1_b.size()},
      {"fc2.w", fc2_w.data(), fc2_w.size()},
      {"fc2.b", fc2_b.data(), fc2_b.size()},
      {"proj.w", proj_w.data(), proj_w.size()},
      {"proj.b", proj_b.data(), proj_b.size()},
  };
}

Mat embed_sentence(const SentenceIds& sentence, const EmbeddingTable& emb,
                   std::size_t window, std::size_t chunks) {
  const std::size_t n = sentence.ids.size();
  const std::size_t min_rows = chunks + window - 1;
  const std::size_t padded = n > min_rows ? n : min_rows;
  Mat x(padded, emb.dim);  // pad rows stay zero
  for (std::size_t i = 0; i < n; ++i) {
    const WordId id = sentence.ids[i];
    if (id >= emb.vocab.size())
      throw std::out_of_range("embed_sentence: token id out of vocabulary");
    const double* row = emb.table.row(id);
    for (std::size_t d = 0; d < emb.dim; ++d) x(i, d) = row[d];
  }
  return x;
}

std::vector<Vec> convolve(const Mat& input, const ConvLayer& conv) {
  const std::size_t h = conv.window;
  if (input.rows() < h)
    throw std::invalid_argument("convolve: input has fewer rows than the window");
  const std::size_t k = input.cols();
  const std::size_t map_len = input.rows() - h + 1;
  std::vector<Vec> maps(conv.filters(), Vec(map_len, 0.0));
  for (std::size_t l = 0; l < conv.filters(); ++l) {
    const double* w = conv.weights.row(l);
    for (std::size_t i = 0; i < map_len; ++i) {
      double acc = conv.bias[l];
      const double* win = input.row(i);  // rows i..i+h-1 are contiguous
      for (std::size_t j = 0; j < h * k; ++j) acc += w[j] * win[j];
      maps[l][i] = acc > 0.0 ? acc : 0.0;
    }
  }
  return maps;
}

std::vector<std::pair<std::size_t, std::size_t>> chunk_bounds(std::size_t len,
                                                              std::size_t chunks) {
  if (chunks == 0) throw std::invalid_argument("chunk_bounds: chunks must be positive");
  if (len < chunks)
    throw std::invalid_argument("chunk_bounds: feature map shorter than chunk count");
  const std::size_t base = len / chunks;
  std::vector<std::pair<std::size_t, std::size_t>> bounds;
  bounds.reserve(chunks);
  std::size_t begin = 0;
  for (std::size_t c = 0; c + 1 < chunks; ++c) {
    bounds.emplace_back(begin, begin + base);
    begin += base;
  }
  bounds.emplace_back(begin, len);  // last chunk absorbs the remainder
  return bounds;
}

PoolResult chunk_max_pool(const Vec& feature_map, std::size_t chunks) {
  const auto bounds = chunk_bounds(feature_map.size(), chunks);
  PoolResult out;
  out.values.resize(chunks);
  out.argmax.resize(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    std::size_t best = bounds[c].first;
    for (std::size_t i = bounds[c].first + 1; i < bounds[c].second; ++i)
      if (feature_map[i] > feature_map[best]) best = i;
    out.values[c] = feature_map[best];
    out.argmax[c] = best;
  }
  return out;
}

EncoderResult encoder_forward(const SentenceIds& sentence, const EncoderParams& params,
                              RunMode mode, Rng* rng) {
  if (mode == RunMode::kTrain && params.dropout > 0.0 && rng == nullptr)
    throw std::invalid_argument("encoder_forward: train mode requires an rng");

  EncoderResult res;
  EncoderTrace& t = res.trace;
  t.token_ids = sentence.ids;
  t.input = embed_sentence(sentence, params.embeddings, params.conv.window, params.chunks);

  const std::size_t h = params.conv.window;
  const std::size_t k = params.embeddings.dim;
  const std::size_t filters = params.conv.filters();
  const std::size_t chunks = params.chunks;
  const std::size_t map_len = t.input.rows() - h + 1;

  t.conv_pre = Mat(filters, map_len);
  t.pooled.assign(filters * chunks, 0.0);
  t.pool_argmax.assign(filters * chunks, 0);
  const auto bounds = chunk_bounds(map_len, chunks);
  Vec post(map_len);
  for (std::size_t l = 0; l < filters; ++l) {
    const double* w = params.conv.weights.row(l);
    double* pre = t.conv_pre.row(l);
    for (std::size_t i = 0; i < map_len; ++i) {
      double acc = params.conv.bias[l];
      const double* win = t.input.row(i);
      for (std::size_t j = 0; j < h * k; ++j) acc += w[j] * win[j];
      pre[i] = acc;
      post[i] = acc > 0.0 ? acc : 0.0;
    }
    for (std::size_t c = 0; c < chunks; ++c) {
      std::size_t best = bounds[c].first;
      for (std::size_t i = bounds[c].first + 1; i < bounds[c].second; ++i)
        if (post[i] > post[best]) best = i;
      t.pooled[l * chunks + c] = post[best];
      t.pool_argmax[l * chunks + c] = best;
    }
  }

  // Inverted dropout: scale kept units at train time so inference is a no-op.
  t.dropout_mask.assign(t.pooled.size(), 1.0);
  if (mode == RunMode::kTrain && params.dropout > 0.0) {
    const double keep = 1.0 - params.dropout;
    for (double& m : t.dropout_mask) m = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
  }
  t.dropped.resize(t.pooled.size());
  for (std::size_t i = 0; i < t.pooled.size(); ++i) t.dropped[i] = t.pooled[i] * t.dropout_mask[i];

  t.fc1_pre = matvec(params.fc1_w, t.dropped);
  axpy(1.0, params.fc1_b, t.fc1_pre);
  t.fc1_out = relu(t.fc1_pre);

  t.fc2_pre = matvec(params.fc2_w, t.fc1_out);
  axpy(1.0, params.fc2_b, t.fc2_pre);
  t.output = relu(t.fc2_pre);

  res.output = t.output;
  return res;
}

Vec project_shared(const Vec& output, const EncoderParams& params) {
  Vec pre = matvec(params.proj_w, output);
  axpy(1.0, params.proj_b, pre);
  Vec out(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i)
    out[i] = apply_proj_activation(pre[i], params.proj_activation);
  return out;
}

EncoderResult encode_projected(const SentenceIds& sentence, const EncoderParams& params,
                               RunMode mode, Rng* rng) {
  EncoderResult res = encoder_forward(sentence, params, mode, rng);
  EncoderTrace& t = res.trace;
  t.proj_pre = matvec(params.proj_w, t.output);
  axpy(1.0, params.proj_b, t.proj_pre);
  t.projected.resize(t.proj_pre.size());
  for (std::size_t i = 0; i < t.proj_pre.size(); ++i)
    t.projected[i] = apply_proj_activation(t.proj_pre[i], params.proj_activation);
  t.has_projection = true;
  res.output = t.projected;
  return res;
}

void encoder_backward_from_output(const EncoderParams& params, const EncoderTrace& trace,
                                  const Vec& grad_output, EncoderGrads& acc) {
  const std::size_t out_dim = params.out_dim();
  if (grad_output.size() != out_dim)
    throw std::invalid_argument("encoder_backward: gradient has wrong length");
  if (trace.pooled.size() != params.pooled_dim() ||
      trace.conv_pre.rows() != params.conv.filters())
    throw std::invalid_argument("encoder_backward: trace does not match parameters");

  // fc2
  Vec d_fc2_pre(out_dim);
  for (std::size_t i = 0; i < out_dim; ++i)
    d_fc2_pre[i] = trace.fc2_pre[i] > 0.0 ? grad_output[i] : 0.0;
  add_outer(acc.fc2_w, d_fc2_pre, trace.fc1_out);
  axpy(1.0, d_fc2_pre, acc.fc2_b);
  Vec d_fc1_out = matvec_transposed(params.fc2_w, d_fc2_pre);

  // fc1
  Vec d_fc1_pre(out_dim);
  for (std::size_t i = 0; i < out_dim; ++i)
    d_fc1_pre[i] = trace.fc1_pre[i] > 0.0 ? d_fc1_out[i] : 0.0;
  add_outer(acc.fc1_w, d_fc1_pre, trace.dropped);
  axpy(1.0, d_fc1_pre, acc.fc1_b);
  Vec d_dropped = matvec_transposed(params.fc1_w, d_fc1_pre);

  // dropout mask reuse, then route each pooled slot to its argmax position
  const std::size_t h = params.conv.window;
  const std::size_t k = params.embeddings.dim;
  const std::size_t chunks = params.chunks;
  Mat d_input(trace.input.rows(), trace.input.cols());
  for (std::size_t l = 0; l < params.conv.filters(); ++l) {
    const double* pre = trace.conv_pre.row(l);
    const double* w = params.conv.weights.row(l);
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t slot = l * chunks + c;
      const double g = d_dropped[slot] * trace.dropout_mask[slot];
      if (g == 0.0) continue;
      const std::size_t i = trace.pool_argmax[slot];
      if (pre[i] <= 0.0) continue;  // relu subgradient
      const double* win = trace.input.row(i);
      double* gw = acc.conv_w.row(l);
      for (std::size_t j = 0; j < h * k; ++j) gw[j] += g * win[j];
      acc.conv_b[l] += g;
      double* gin = d_input.row(i);
      for (std::size_t j = 0; j < h * k; ++j) gin[j] += g * w[j];
    }
  }

  // Embedding rows: only real tokens receive gradient; pad rows are constants.
  if (!params.freeze_embeddings) {
    for (std::size_t p = 0; p < trace.token_ids.size(); ++p) {
      double* grow = acc.embeddings.row(trace.token_ids[p]);
      const double* din = d_input.row(p);
      for (std::size_t d = 0; d < k; ++d) grow[d] += din[d];
    }
  }
}

void encoder_backward(const EncoderParams& params, const EncoderTrace& trace,
                      const Vec& grad_projected, EncoderGrads& acc) {
  if (!trace.has_projection)
    throw std::invalid_argument("encoder_backward: trace has no projection record");
  const std::size_t out_dim = params.out_dim();
  if (grad_projected.size() != out_dim)
    throw std::invalid_argument("encoder_backward: gradient has wrong length");

  Vec d_proj_pre(out_dim);
  for (std::size_t i = 0; i < out_dim; ++i)
    d_proj_pre[i] = grad_projected[i] * proj_activation_grad(trace.proj_pre[i],
                                                             trace.projected[i],
                                                             params.proj_activation);
  add_outer(acc.proj_w, d_proj_pre, trace.output);
  axpy(1.0, d_proj_pre, acc.proj_b);
  Vec d_output = matvec_transposed(params.proj_w, d_proj_pre);
  encoder_backward_from_output(params, trace, d_output, acc);
}

void encoder_to_snapshot(const EncoderParams& p, const std::string& prefix, Snapshot& snap) {
  std::vector<std::string> words;
  for (WordId id = Vocabulary::kNumReserved; id < p.embeddings.vocab.size(); ++id)
    words.push_back(p.embeddings.vocab.word(id));
  snap.put_strings(prefix + "vocab", words);
  snap.put_i64(prefix + "embed_dim", static_cast<std::int64_t>(p.embeddings.dim));
  snap.put_i64(prefix + "window", static_cast<std::int64_t>(p.conv.window));
  snap.put_i64(prefix + "filters", static_cast<std::int64_t>(p.conv.filters()));
  snap.put_i64(prefix + "chunks", static_cast<std::int64_t>(p.chunks));
  snap.put_i64(prefix + "out_dim", static_cast<std::int64_t>(p.out_dim()));
  snap.put_f64(prefix + "dropout", p.dropout);
  snap.put_i64(prefix + "proj_activation", static_cast<std::int64_t>(p.proj_activation));
  snap.put_mat(prefix + "embeddings", p.embeddings.table);
  snap.put_mat(prefix + "conv.w", p.conv.weights);
  snap.put_vec(prefix + "conv.b", p.conv.bias);
  snap.put_mat(prefix + "fc1.w", p.fc1_w);
  snap.put_vec(prefix + "fc1.b", p.fc1_b);
  snap.put_mat(prefix + "fc2.w", p.fc2_w);
  snap.put_vec(prefix + "fc2.b", p.fc2_b);
  snap.put_mat(prefix + "proj.w", p.proj_w);
  snap.put_vec(prefix + "proj.b", p.proj_b);
}

EncoderParams encoder_from_snapshot(const Snapshot& snap, const std::string& prefix) {
  EncoderParams p;
  Vocabulary vocab;
  for (const auto& w : snap.get_strings(prefix + "vocab")) vocab.add(w, 0);
  p.embeddings.vocab = std::move(vocab);
  p.embeddings.dim = static_cast<std::size_t>(snap.get_i64(prefix + "embed_dim"));
  p.embeddings.table = snap.get_mat(prefix + "embeddings");
  p.conv.window = static_cast<std::size_t>(snap.get_i64(prefix + "window"));
  p.conv.weights = snap.get_mat(prefix + "conv.w");
  p.conv.bias = snap.get_vec(prefix + "conv.b");
  p.chunks = static_cast<std::size_t>(snap.get_i64(prefix + "chunks"));
  p.fc1_w = snap.get_mat(prefix + "fc1.w");
  p.fc1_b = snap.get_vec(prefix + "fc1.b");
  p.fc2_w = snap.get_mat(prefix + "fc2.w");
  p.fc2_b = snap.get_vec(prefix + "fc2.b");
  p.proj_w = snap.get_mat(prefix + "proj.w");
  p.proj_b = snap.get_vec(prefix + "proj.b");
  p.dropout = snap.get_f64(prefix + "dropout");
  p.proj_activation = static_cast<ProjActivation>(snap.get_i64(prefix + "proj_activation"));
  if (p.embeddings.table.rows() != p.embeddings.vocab.size() ||
      p.embeddings.table.cols() != p.embeddings.dim)
    throw std::runtime_error("snapshot: embedding shape does not match vocabulary");
  return p;
}

void save_encoder(const EncoderParams& params, const std::string& path) {
  Snapshot snap("encoder");
  encoder_to_snapshot(params, "", snap);
  snap.write(path);
}

EncoderParams load_encoder(const std::string& path) {
  Snapshot snap = Snapshot::read(path);
  if (snap.kind() != "encoder")
    throw std::runtime_error(path + ": expected an encoder snapshot, got '" + snap.kind() + "'");
  return encoder_from_snapshot(snap, "");
}

}  // namespace bisenc

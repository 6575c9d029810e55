/*
 * Copyright 2026 The contrast Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "contrast/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "contrast/error.hpp"

namespace contrast {

Matrix random_normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = stddev * rng.normal();
  return m;
}

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng) {
  return {random_normal(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng),
          Matrix(1, out)};
}

Matrix Linear::forward(const Matrix& x) const {
  Matrix y = matmul(x, weight);
  add_row_broadcast(y, bias);
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy, Linear* grad) const {
  if (grad != nullptr) {
    add_at_b(x, dy, grad->weight);
    add_column_sums(dy, grad->bias);
  }
  return matmul_bt(dy, weight);
}

LayerNorm LayerNorm::init(std::size_t dim, bool normalize) {
  return {Matrix(1, dim, 1.0), Matrix(1, dim), normalize};
}

Matrix LayerNorm::forward(const Matrix& x, LayerNormCache* cache) const {
  const std::size_t d = x.cols();
  Matrix normalized(x.rows(), d);
  std::vector<double> inv_std(x.rows());
  Matrix y(x.rows(), d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    if (!normalize) {
      inv_std[i] = 1.0;
      for (std::size_t j = 0; j < d; ++j) {
        normalized(i, j) = r[j];
        y(i, j) = r[j] * gain(0, j) + bias(0, j);
      }
      continue;
    }
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + kEpsilon);
    for (std::size_t j = 0; j < d; ++j) {
      normalized(i, j) = (r[j] - mean) * inv_std[i];
      y(i, j) = normalized(i, j) * gain(0, j) + bias(0, j);
    }
  }
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix LayerNorm::backward(const LayerNormCache& cache, const Matrix& dy, LayerNorm* grad) const {
  const std::size_t d = dy.cols();
  const auto n = static_cast<double>(d);
  Matrix dx(dy.rows(), d);
  std::vector<double> dxhat(d);
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dxhat[j] = dy(i, j) * gain(0, j);
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * cache.normalized(i, j);
      if (grad != nullptr) {
        grad->gain(0, j) += dy(i, j) * cache.normalized(i, j);
        grad->bias(0, j) += dy(i, j);
      }
    }
    if (normalize) {
      mean_dxhat /= n;
      mean_dxhat_xhat /= n;
    } else {
      mean_dxhat = 0.0;
      mean_dxhat_xhat = 0.0;
    }
    for (std::size_t j = 0; j < d; ++j) {
      dx(i, j) = cache.inv_std[i] *
                 (dxhat[j] - mean_dxhat - cache.normalized(i, j) * mean_dxhat_xhat);
    }
  }
  return dx;
}

Attention Attention::init(std::size_t dim, std::size_t num_heads, Rng& rng) {
  if (num_heads == 0 || dim % num_heads != 0) {
    throw Error(ErrorCode::InvalidArgument, "embed_dim must be divisible by num_heads");
  }
  Attention a;
  a.query = Linear::init(dim, dim, rng);
  a.key = Linear::init(dim, dim, rng);
  a.value = Linear::init(dim, dim, rng);
  a.output = Linear::init(dim, dim, rng);
  a.num_heads = num_heads;
  return a;
}

Matrix Attention::forward(const Matrix& queries_in, const Matrix& keys_in, bool causal,
                          std::size_t q_block, std::size_t kv_block,
                          AttentionCache* cache) const {
  const std::size_t blocks = queries_in.rows() / q_block;
  if (blocks * q_block != queries_in.rows() || blocks * kv_block != keys_in.rows()) {
    throw Error(ErrorCode::LengthMismatch, "attention block layout");
  }
  if (cache != nullptr && blocks != 1) {
    throw Error(ErrorCode::InvalidArgument, "attention cache needs a single block");
  }
  Matrix q = query.forward(queries_in);
  Matrix k = key.forward(keys_in);
  Matrix v = value.forward(keys_in);
  const std::size_t dim = q.cols();
  const std::size_t head_dim = dim / num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Matrix merged(queries_in.rows(), dim);
  std::vector<Matrix> probs;
  if (cache != nullptr) probs.assign(num_heads, Matrix(q_block, kv_block));
  std::vector<double> p(kv_block);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t q0 = b * q_block;
    const std::size_t k0 = b * kv_block;
    for (std::size_t h = 0; h < num_heads; ++h) {
      const std::size_t c0 = h * head_dim;
      for (std::size_t i = 0; i < q_block; ++i) {
        const std::size_t visible = causal ? i + 1 : kv_block;
        const auto qi = q.row(q0 + i).subspan(c0, head_dim);
        double m = -INFINITY;
        for (std::size_t j = 0; j < visible; ++j) {
          p[j] = dot(qi, k.row(k0 + j).subspan(c0, head_dim)) * scale;
          m = std::max(m, p[j]);
        }
        double s = 0.0;
        for (std::size_t j = 0; j < visible; ++j) {
          p[j] = std::exp(p[j] - m);
          s += p[j];
        }
        auto out = merged.row(q0 + i).subspan(c0, head_dim);
        for (std::size_t j = 0; j < visible; ++j) {
          p[j] /= s;
          const auto vj = v.row(k0 + j).subspan(c0, head_dim);
          for (std::size_t c = 0; c < head_dim; ++c) out[c] += p[j] * vj[c];
          if (cache != nullptr) probs[h](i, j) = p[j];
        }
      }
    }
  }
  Matrix y = output.forward(merged);
  if (cache != nullptr) {
    cache->queries_in = queries_in;
    cache->keys_in = keys_in;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->merged = std::move(merged);
  }
  return y;
}

Attention::InputGrads Attention::backward(const AttentionCache& cache, const Matrix& dy,
                                          bool causal, Attention* grad) const {
  const Matrix dmerged = output.backward(cache.merged, dy, grad ? &grad->output : nullptr);
  const std::size_t q_len = cache.q.rows();
  const std::size_t kv_len = cache.k.rows();
  const std::size_t dim = cache.q.cols();
  const std::size_t head_dim = dim / num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Matrix dq(q_len, dim), dk(kv_len, dim), dv(kv_len, dim);
  std::vector<double> dp(kv_len);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const std::size_t c0 = h * head_dim;
    const Matrix& probs = cache.probs[h];
    for (std::size_t i = 0; i < q_len; ++i) {
      const std::size_t visible = causal ? i + 1 : kv_len;
      const auto dout = dmerged.row(i).subspan(c0, head_dim);
      double weighted = 0.0;
      for (std::size_t j = 0; j < visible; ++j) {
        dp[j] = dot(dout, cache.v.row(j).subspan(c0, head_dim));
        weighted += probs(i, j) * dp[j];
        auto dvj = dv.row(j).subspan(c0, head_dim);
        for (std::size_t c = 0; c < head_dim; ++c) dvj[c] += probs(i, j) * dout[c];
      }
      auto dqi = dq.row(i).subspan(c0, head_dim);
      const auto qi = cache.q.row(i).subspan(c0, head_dim);
      for (std::size_t j = 0; j < visible; ++j) {
        const double ds = probs(i, j) * (dp[j] - weighted) * scale;
        if (ds == 0.0) continue;
        const auto kj = cache.k.row(j).subspan(c0, head_dim);
        auto dkj = dk.row(j).subspan(c0, head_dim);
        for (std::size_t c = 0; c < head_dim; ++c) {
          dqi[c] += ds * kj[c];
          dkj[c] += ds * qi[c];
        }
      }
    }
  }
  InputGrads g;
  g.queries_in = query.backward(cache.queries_in, dq, grad ? &grad->query : nullptr);
  g.keys_in = key.backward(cache.keys_in, dk, grad ? &grad->key : nullptr);
  g.keys_in += value.backward(cache.keys_in, dv, grad ? &grad->value : nullptr);
  return g;
}

double gelu(double x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

double gelu_grad(double x) {
  constexpr double c = 0.7978845608028654;
  const double t = std::tanh(c * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * 0.044715 * x * x);
}

FeedForward FeedForward::init(std::size_t dim, std::size_t hidden, Rng& rng) {
  return {Linear::init(dim, hidden, rng), Linear::init(hidden, dim, rng)};
}

Matrix FeedForward::forward(const Matrix& x, FeedForwardCache* cache) const {
  Matrix pre = up.forward(x);
  Matrix act(pre.rows(), pre.cols());
  for (std::size_t i = 0; i < pre.size(); ++i) act.values()[i] = gelu(pre.values()[i]);
  Matrix y = down.forward(act);
  if (cache != nullptr) {
    cache->x = x;
    cache->pre = std::move(pre);
    cache->act = std::move(act);
  }
  return y;
}

Matrix FeedForward::backward(const FeedForwardCache& cache, const Matrix& dy,
                             FeedForward* grad) const {
  Matrix dact = down.backward(cache.act, dy, grad ? &grad->down : nullptr);
  for (std::size_t i = 0; i < dact.size(); ++i) {
    dact.values()[i] *= gelu_grad(cache.pre.values()[i]);
  }
  return up.backward(cache.x, dact, grad ? &grad->up : nullptr);
}

}  // namespace contrast

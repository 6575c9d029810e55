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

#ifndef CONTRAST_LAYERS_HPP_
#define CONTRAST_LAYERS_HPP_

// Transformer building blocks with hand-written backward passes.
//
// Each layer exposes forward() with an optional cache and backward(), which
// returns the input gradient and, when given a gradient holder of the same
// type, accumulates parameter gradients into it. Inputs may stack several
// equal-length sequences; attention then runs independently per block.

#include <concepts>
#include <cstddef>
#include <string>
#include <type_traits>
#include <vector>

#include "contrast/matrix.hpp"
#include "contrast/rng.hpp"

namespace contrast {

template <class T, class U>
concept SameModuloConst = std::same_as<std::remove_const_t<T>, U>;

struct Linear {
  Matrix weight;  // [in x out]
  Matrix bias;    // [1 x out]

  static Linear init(std::size_t in, std::size_t out, Rng& rng);

  Matrix forward(const Matrix& x) const;
  Matrix backward(const Matrix& x, const Matrix& dy, Linear* grad) const;
};

template <SameModuloConst<Linear> L, class Fn>
void visit_params(L& l, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".weight", l.weight);
  fn(prefix + ".bias", l.bias);
}

struct LayerNormCache {
  Matrix normalized;             // (x - mean) / std
  std::vector<double> inv_std;  // per row
};

// With `normalize` off the layer reduces to the elementwise affine map
// x * gain + bias.
struct LayerNorm {
  Matrix gain;  // [1 x d]
  Matrix bias;  // [1 x d]
  bool normalize = true;

  static constexpr double kEpsilon = 1e-5;

  static LayerNorm init(std::size_t dim, bool normalize = true);

  Matrix forward(const Matrix& x, LayerNormCache* cache) const;
  Matrix backward(const LayerNormCache& cache, const Matrix& dy, LayerNorm* grad) const;
};

template <SameModuloConst<LayerNorm> L, class Fn>
void visit_params(L& l, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".gain", l.gain);
  fn(prefix + ".bias", l.bias);
}

struct AttentionCache {
  Matrix queries_in;
  Matrix keys_in;
  Matrix q, k, v;
  std::vector<Matrix> probs;  // per head, [q_len x kv_len]
  Matrix merged;              // concatenated head outputs
};

// Multi-head scaled dot-product attention.
struct Attention {
  Linear query, key, value, output;
  std::size_t num_heads = 1;

  static Attention init(std::size_t dim, std::size_t num_heads, Rng& rng);

  // `queries_in` holds rows for blocks of `q_block` rows and `keys_in` the
  // matching blocks of `kv_block` rows. A cache requires a single block.
  Matrix forward(const Matrix& queries_in, const Matrix& keys_in, bool causal,
                 std::size_t q_block, std::size_t kv_block, AttentionCache* cache) const;

  // Self-attention over a single sequence.
  Matrix forward(const Matrix& x, bool causal, AttentionCache* cache) const {
    return forward(x, x, causal, x.rows(), x.rows(), cache);
  }

  struct InputGrads {
    Matrix queries_in;
    Matrix keys_in;
  };
  InputGrads backward(const AttentionCache& cache, const Matrix& dy, bool causal,
                      Attention* grad) const;
};

template <SameModuloConst<Attention> A, class Fn>
void visit_params(A& a, const std::string& prefix, Fn&& fn) {
  visit_params(a.query, prefix + ".query", fn);
  visit_params(a.key, prefix + ".key", fn);
  visit_params(a.value, prefix + ".value", fn);
  visit_params(a.output, prefix + ".output", fn);
}

struct FeedForwardCache {
  Matrix x;
  Matrix pre;  // before GELU
  Matrix act;  // after GELU
};

struct FeedForward {
  Linear up, down;

  static FeedForward init(std::size_t dim, std::size_t hidden, Rng& rng);

  Matrix forward(const Matrix& x, FeedForwardCache* cache) const;
  Matrix backward(const FeedForwardCache& cache, const Matrix& dy, FeedForward* grad) const;
};

template <SameModuloConst<FeedForward> F, class Fn>
void visit_params(F& f, const std::string& prefix, Fn&& fn) {
  visit_params(f.up, prefix + ".up", fn);
  visit_params(f.down, prefix + ".down", fn);
}

// tanh approximation of GELU and its derivative.
double gelu(double x);
double gelu_grad(double x);

// A gradient holder shaped like `params` and filled with zeros.
template <class P>
P zeros_like(const P& params) {
  P out = params;
  visit_params(out, "", [](const std::string&, Matrix& m) { m.set_zero(); });
  return out;
}

Matrix random_normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

}  // namespace contrast

#endif  // CONTRAST_LAYERS_HPP_

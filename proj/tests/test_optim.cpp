/*
 * Copyright (c) 2026 The inucleus Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "inucleus/errors.hpp"
#include "inucleus/optim.hpp"

namespace inucleus {
namespace {

ParamStore<double> store_with(double w, double bias, double gamma) {
  ParamStore<double> s;
  s.add("w", Tensor<double>({1}, w), true, ParamRole::weight);
  s.add("b", Tensor<double>({1}, bias), true, ParamRole::bias);
  s.add("g", Tensor<double>({1}, gamma), true, ParamRole::bn_gamma);
  s.add("rm", Tensor<double>({1}, 0.5), false, ParamRole::bn_running_mean);
  return s;
}

TEST(Glorot, BoundClosedForm) {
  EXPECT_DOUBLE_EQ(glorot_bound(3, 3), 1.0);
  EXPECT_DOUBLE_EQ(glorot_bound(80, 2560), std::sqrt(6.0 / 2640.0));
  EXPECT_THROW(glorot_bound(0, 0), Error);
}

TEST(Glorot, EmpiricalDistribution) {
  std::mt19937_64 rng(1);
  const Tensor<double> t = glorot_uniform<double>({100, 100}, 20, 30, rng);
  const double a = glorot_bound(20, 30);
  double mean = 0.0, lo = 0.0, hi = 0.0;
  for (double v : t.values()) {
    ASSERT_LE(std::abs(v), a);
    mean += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  mean /= static_cast<double>(t.size());
  EXPECT_LT(std::abs(mean), 0.02 * a);
  EXPECT_LT(lo, -0.99 * a);
  EXPECT_GT(hi, 0.99 * a);
}

TEST(L2, ZeroLambdaLeavesGradients) {
  ParamStore<double> s = store_with(3.0, 1.0, 2.0);
  for (auto& p : s) p.grad.fill(0.25);
  EXPECT_EQ(add_l2_grad(s, RegConfig{0.0, {ParamRole::weight}}), 0.0);
  for (const auto& p : s) EXPECT_EQ(p.grad[0], 0.25);
}

TEST(L2, HandArithmetic) {
  ParamStore<double> s = store_with(3.0, 1.0, 2.0);
  const double penalty = add_l2_grad(s, RegConfig{});
  EXPECT_NEAR(penalty, 0.0009, 1e-15);
  EXPECT_NEAR(s.get("w").grad[0], 0.0006, 1e-15);
  EXPECT_EQ(s.get("b").grad[0], 0.0);
  EXPECT_EQ(s.get("g").grad[0], 0.0);
  EXPECT_EQ(s.get("rm").grad[0], 0.0);
}

TEST(L2, PenaltyMatchesRecomputation) {
  std::mt19937_64 rng(2);
  ParamStore<double> s;
  s.add("a", glorot_uniform<double>({4, 3, 5}, 15, 20, rng), true, ParamRole::weight);
  s.add("b", glorot_uniform<double>({7}, 1, 1, rng), true, ParamRole::bias);
  s.add("c", glorot_uniform<double>({2, 2}, 2, 2, rng), true, ParamRole::weight);
  double expect = 0.0;
  for (const char* n : {"a", "c"})
    for (double v : s.get(n).value.values()) expect += v * v;
  expect *= 1e-4;
  EXPECT_NEAR(l2_penalty(s, RegConfig{}), expect, 1e-5 * expect);
  RegConfig all{1e-4, {ParamRole::weight, ParamRole::bias}};
  for (double v : s.get("b").value.values()) expect += 1e-4 * v * v;
  EXPECT_NEAR(l2_penalty(s, all), expect, 1e-5 * expect);
  EXPECT_THROW(l2_penalty(s, RegConfig{-1.0, {}}), ConfigError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamStore<double> s = store_with(1.0, 1.0, 1.0);
  s[0].grad[0] = 0.37;
  s[1].grad[0] = -4.0;
  AdamState<double> st;
  adam_step(s, st);
  EXPECT_EQ(st.step, 1u);
  EXPECT_NEAR(s[0].value[0], 1.0 - 1e-3 * 0.37 / (0.37 + 1e-8), 1e-12);
  EXPECT_NEAR(s[1].value[0], 1.0 + 1e-3 * 4.0 / (4.0 + 1e-8), 1e-12);
  EXPECT_EQ(s[2].value[0], 1.0);  // zero gradient
  EXPECT_EQ(s[3].value[0], 0.5);  // not trainable
}

TEST(Adam, ZeroGradientFreshState) {
  ParamStore<double> s = store_with(2.0, -1.0, 0.5);
  AdamState<double> st;
  adam_step(s, st);
  EXPECT_EQ(s[0].value[0], 2.0);
  EXPECT_EQ(s[1].value[0], -1.0);
  EXPECT_EQ(s[2].value[0], 0.5);
}

TEST(Adam, ConvergesOnQuadratic) {
  ParamStore<double> s;
  s.add("w", Tensor<double>({1}, 5.0), true, ParamRole::weight);
  AdamState<double> st;
  st.lr = 0.1;
  for (int i = 0; i < 200; ++i) {
    s[0].grad[0] = 2.0 * s[0].value[0];
    adam_step(s, st);
  }
  EXPECT_LT(std::abs(s[0].value[0]), 0.5);
  EXPECT_EQ(st.step, 200u);
}

TEST(Adam, ZeroLearningRateAdvancesStateOnly) {
  std::mt19937_64 rng(3);
  ParamStore<float> s;
  s.add("w", glorot_uniform<float>({5, 5}, 5, 5, rng), true, ParamRole::weight);
  const Tensor<float> before = s[0].value;
  AdamState<float> st;
  st.lr = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 25; ++k) s[0].grad[k] = static_cast<float>(k) - 12.0f;
    adam_step(s, st);
  }
  EXPECT_TRUE(bitwise_equal(before, s[0].value));
  EXPECT_EQ(st.step, 3u);
  EXPECT_NE(st.m[0][0], 0.0f);
  for (float v : st.v[0].values()) EXPECT_GE(v, 0.0f);
}

TEST(Adam, MomentsFollowGeometricSeries) {
  ParamStore<double> s;
  s.add("w", Tensor<double>({1}, 0.0), true, ParamRole::weight);
  AdamState<double> st;
  const double g = 0.8;
  for (int n = 1; n <= 25; ++n) {
    s[0].grad[0] = g;
    adam_step(s, st);
    EXPECT_NEAR(st.m[0][0], g * (1.0 - std::pow(0.9, n)), 1e-6);
    EXPECT_NEAR(st.v[0][0], g * g * (1.0 - std::pow(0.999, n)), 1e-6);
  }
}

TEST(Adam, StateMustMatchStore) {
  ParamStore<double> s = store_with(1, 1, 1);
  AdamState<double> st;
  adam_step(s, st);
  s.add("extra", Tensor<double>({1}), true, ParamRole::weight);
  EXPECT_THROW(adam_step(s, st), Error);
}

}  // namespace
}  // namespace inucleus

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

#include <random>

#include "inucleus/errors.hpp"
#include "inucleus/tensor.hpp"
#include "test_support.hpp"

namespace inucleus {
namespace {

TEST(Tensor, ShapeInvariants) {
  Tensor<float> t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_THROW(Tensor<float>({2, 0}), ShapeError);
  EXPECT_THROW(Tensor<float>(Shape{}), ShapeError);
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
}

TEST(Tensor, RowMajorOffsets) {
  Tensor<float> t({2, 3, 4});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i);
  EXPECT_EQ(t.offset({1, 2, 3}), 23u);
  EXPECT_EQ(t.at({1, 0, 2}), 14.0f);
  EXPECT_THROW(t.at({2, 0, 0}), ShapeError);
  const Tensor<float> r = t.reshape({6, 4});
  EXPECT_EQ(r.at({3, 2}), t.at({1, 0, 2}));
  EXPECT_EQ(r.at({3, 2}), 14.0f);
  EXPECT_TRUE(bitwise_equal(r.reshape({2, 3, 4}), t));
  EXPECT_THROW(t.reshape({5, 5}), ShapeError);
}

TEST(ConcatChannels, BlockCopy) {
  Tensor<float> a({2, 5}), b({3, 5});
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<float>(i);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = 100.0f + static_cast<float>(i);
  const Tensor<float> c = concat_channels({a, b});
  ASSERT_EQ(c.shape(), (Shape{5, 5}));
  EXPECT_EQ(c.at({0, 0}), 0.0f);
  EXPECT_EQ(c.at({1, 4}), 9.0f);
  EXPECT_EQ(c.at({2, 0}), 100.0f);
  EXPECT_TRUE(bitwise_equal(slice_channels(c, 0, 2), a));
  EXPECT_TRUE(bitwise_equal(slice_channels(c, 2, 3), b));
}

TEST(ConcatChannels, NucleusWidth) {
  const Tensor<float> x({64, 2000}, 1.0f);
  EXPECT_EQ(concat_channels({x, x, x}).shape(), (Shape{192, 2000}));
}

TEST(ConcatChannels, LengthMismatchNamesInput) {
  try {
    concat_channels({Tensor<float>({1, 4}), Tensor<float>({1, 3})});
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("length mismatch at input 1"), std::string::npos);
  }
  EXPECT_THROW(concat_channels({Tensor<float>({1, 4})}), ShapeError);
}

TEST(ReshapeToImage, PixelMapping) {
  const Tensor<float> l({2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6});
  const Tensor<float> img = reshape_to_image(l);
  ASSERT_EQ(img.shape(), (Shape{2, 3, 1}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(img.at({i, j, 0}), l.at({i, j}));
  EXPECT_TRUE(bitwise_equal(image_to_channels(img), l));
  EXPECT_EQ(reshape_to_image(Tensor<float>({192, 1991})).shape(), (Shape{192, 1991, 1}));
  EXPECT_THROW(reshape_to_image(Tensor<float>({1, 2, 3})), ShapeError);
}

TEST(Transpose, Involution) {
  std::mt19937_64 rng(3);
  const auto m = testing::random_tensor<float>({3, 7}, rng);
  const auto t = transpose2d(m);
  EXPECT_EQ(t.shape(), (Shape{7, 3}));
  EXPECT_EQ(t.at({5, 1}), m.at({1, 5}));
  EXPECT_TRUE(bitwise_equal(transpose2d(t), m));
}

TEST(Tensor, Cast) {
  const Tensor<float> f({3}, std::vector<float>{0.5f, -1.25f, 3.0f});
  const Tensor<double> d = f.cast<double>();
  EXPECT_EQ(d[1], -1.25);
  EXPECT_TRUE(bitwise_equal(d.cast<float>(), f));
}

}  // namespace
}  // namespace inucleus

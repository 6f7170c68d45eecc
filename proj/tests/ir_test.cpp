// Copyright 2026 The tpcost Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tpcost/ir/parser.hpp"
#include "tpcost/ir/printer.hpp"

namespace tpcost::ir {
namespace {

constexpr const char* kConvRelu = R"(
# fused conv2d + relu sharing the batch/channel loop
program conv_relu {
  for n in 0..64 @parallel {
    for k in 0..56 {
      for c in 0..64 @unroll {
        compute conv { fma=1 bytes_read=8 bytes_written=4 buffers_read=2 buffers_written=1 }
      }
    }
    for k in 0..56 @vectorize {
      compute relu { special=1 bytes_read=4 bytes_written=4 buffers_read=1 buffers_written=1 }
    }
  }
}
)";

TEST(ParseProgram, SingleLoopSingleLeaf) {
  auto ast = parse_program(
      "program p { for i in 0..4 { compute A { fma=2 bytes_read=16 bytes_written=8 } } }");
  ASSERT_EQ(ast.body.size(), 1u);
  const auto& loop = ast.body[0];
  ASSERT_FALSE(loop.is_leaf());
  EXPECT_EQ(loop.loop().var_name, "i");
  EXPECT_EQ(loop.loop().extent, 4);
  ASSERT_EQ(loop.children.size(), 1u);
  ASSERT_TRUE(loop.children[0].is_leaf());
  EXPECT_EQ(loop.children[0].leaf().stats.fma_count, 2u);
  EXPECT_EQ(loop.children[0].leaf().stats.bytes_read, 16u);
  EXPECT_EQ(ast.n_leaf, 1);
}

TEST(ParseProgram, FusedConvReluHasTwoLeaves) {
  auto ast = parse_program(kConvRelu);
  EXPECT_EQ(ast.name, "conv_relu");
  EXPECT_EQ(ast.n_leaf, 2);
  EXPECT_EQ(count_leaves(ast), 2);
  const auto& outer = ast.body.at(0);
  EXPECT_TRUE(outer.loop().annotations.contains(Annotation::kParallel));
  EXPECT_EQ(outer.children.size(), 2u);
}

TEST(ParseProgram, ZeroExtentIsValidationError) {
  EXPECT_THROW(parse_program("program p { for i in 0..0 { compute A { fma=1 } } }"), ValidationError);
}

TEST(ParseProgram, EmptyLoopBodyIsValidationError) {
  EXPECT_THROW(parse_program("program p { for i in 0..3 { } }"), ValidationError);
}

TEST(ParseProgram, AllZeroComputeIsValidationError) {
  EXPECT_THROW(parse_program("program p { compute A { fma=0 } }"), ValidationError);
}

TEST(ParseProgram, DuplicateKeyAndAnnotationRejected) {
  EXPECT_THROW(parse_program("program p { compute A { fma=1 fma=2 } }"), ValidationError);
  EXPECT_THROW(parse_program("program p { for i in 0..2 @unroll @unroll { compute A { fma=1 } } }"),
               ValidationError);
}

TEST(ParseProgram, SyntaxErrorsCarryPosition) {
  try {
    parse_program("program p {\n  for i in 1..4 { compute A { fma=1 } }\n}");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 12u);
  }
  EXPECT_THROW(parse_program("program p { compute A { flops=1 } }"), SyntaxError);
  EXPECT_THROW(parse_program("program p { compute A { fma=1 } "), SyntaxError);
  EXPECT_THROW(parse_program("program p { compute A { fma=99999999999999999999999 } }"), SyntaxError);
  EXPECT_THROW(parse_program("program p { for i in 0..2 @fuse { compute A { fma=1 } } }"), SyntaxError);
  EXPECT_THROW(parse_program(""), SyntaxError);
}

TEST(ParseProgram, LeafLimitIsTyped) {
  std::string text = "program p {";
  for (int i = 0; i < 17; ++i) text += " compute A { fma=1 }";
  text += " }";
  EXPECT_THROW(parse_program(text), LeafCountExceeded);
  EXPECT_NO_THROW(parse_program(text, ParseOptions{.max_leaves = 17}));
}

TEST(ParseProgram, DeepNestingIsRejectedNotCrashing) {
  std::string text = "program p {";
  for (int i = 0; i < 5000; ++i) text += " for i in 0..1 {";
  EXPECT_THROW(parse_program(text), SyntaxError);
}

TEST(ParsePrograms, ReadsSeveralBlocks) {
  auto progs = parse_programs("program a { compute x { add=1 } }\nprogram b { compute y { mul=1 } }");
  ASSERT_EQ(progs.size(), 2u);
  EXPECT_EQ(progs[1].name, "b");
}

TEST(CountLeaves, Examples) {
  EXPECT_EQ(count_leaves(parse_program("program p { compute A { fma=1 } }")), 1);
  auto balanced = parse_program(R"(program p {
    for i in 0..2 { compute A { fma=1 } compute B { fma=1 } }
    for j in 0..2 { compute C { fma=1 } compute D { fma=1 } } })");
  EXPECT_EQ(count_leaves(balanced), 4);
}

int brute_force_leaves(const AstNode& n) {
  int count = 0;
  std::vector<const AstNode*> stack{&n};
  while (!stack.empty()) {
    const AstNode* cur = stack.back();
    stack.pop_back();
    if (cur->children.empty() && std::holds_alternative<LeafInfo>(cur->kind)) ++count;
    for (const auto& c : cur->children) stack.push_back(&c);
  }
  return count;
}

TEST(Properties, RoundTripAndLeafCount) {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    ProgramAst ast = testing::random_program(rng, 8, 16);
    int brute = 0;
    for (const auto& s : ast.body) brute += brute_force_leaves(s);
    EXPECT_EQ(count_leaves(ast), brute);
    const std::string text = print_program(ast);
    ProgramAst again = parse_program(text);
    EXPECT_EQ(again, ast) << text;
    EXPECT_EQ(print_program(again), text);
  }
}

TEST(Properties, ArbitraryBytesYieldTypedErrors) {
  Rng rng(11);
  const std::string alphabet = "program for in compute {}=@.0123456789 fma add\n#xyz\xff\x01";
  const std::string valid = print_program(parse_program(kConvRelu));
  for (int trial = 0; trial < 3000; ++trial) {
    std::string input;
    if (trial % 2 == 0) {
      const auto len = rng.below(80);
      for (std::uint64_t i = 0; i < len; ++i) {
        input.push_back(trial % 4 == 0 ? static_cast<char>(rng.below(256))
                                       : alphabet[rng.below(alphabet.size())]);
      }
    } else {
      input = valid;
      const auto n_mut = 1 + rng.below(4);
      for (std::uint64_t i = 0; i < n_mut; ++i) {
        input[rng.below(input.size())] = alphabet[rng.below(alphabet.size())];
      }
    }
    try {
      parse_program(input);
    } catch (const InputError&) {
    }
  }
}

}  // namespace
}  // namespace tpcost::ir

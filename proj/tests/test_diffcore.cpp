#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lmcl/checkpoint.hpp"
#include "lmcl/nn.hpp"
#include "lmcl/ops.hpp"
#include "support/gradcheck.hpp"

using namespace lmcl;
using lmcl::testing::random_tensor;

TEST_CASE("sigmoid at zero is one half with slope one quarter") {
  Tape tape;
  const Var x = tape.variable(Tensor::scalar(0.0));
  const Var y = sigmoid(x);
  CHECK(y.value().item() == 0.5);
  tape.backward(sum(y));
  CHECK(tape.grad_of(x)->item() == 0.25);
}

TEST_CASE("softmax of equal logits is uniform") {
  Tape tape;
  const Var p = softmax(tape.constant(Tensor({1, 7}, 3.3)), 1);
  for (double v : p.value().data()) CHECK(v == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("softmax rows are distributions") {
  Rng rng = derive_rng(3, 0);
  Tape tape;
  const Var p = softmax(tape.constant(random_tensor({6, 9}, rng, -20.0, 20.0)), 1);
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 9; ++c) {
      CHECK(p.value().at(r, c) >= 0.0);
      s += p.value().at(r, c);
    }
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("identity matmul returns its operand") {
  Rng rng = derive_rng(4, 0);
  Tape tape;
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  const Tensor a = random_tensor({3, 3}, rng);
  CHECK(matmul(tape.constant(eye), tape.constant(a)).value() == a);
}

TEST_CASE("gradient of sum of squares") {
  Tape tape;
  const Var x = tape.variable(Tensor({2}, {1.0, 2.0}));
  tape.backward(sum(mul(x, x)));
  const Tensor& g = *tape.grad_of(x);
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 4.0);
}

TEST_CASE("unused parameters get exactly zero gradient") {
  ParamStore store;
  store.add("used", Tensor({2}, {1.0, -1.0}));
  store.add("unused", Tensor({3}, 5.0));
  Tape tape;
  const auto g = tape.backward(sum(mul(tape.param(store, "used"), tape.param(store, "used"))));
  REQUIRE(g.size() == 2);
  for (double v : g[1].data()) CHECK(v == 0.0);
}

TEST_CASE("backward rejects a non-scalar root") {
  Tape tape;
  const Var x = tape.variable(Tensor({2, 2}, 1.0));
  CHECK_THROWS_AS(tape.backward(x), ShapeError);
}

TEST_CASE("shape errors name the primitive and both shapes") {
  Tape tape;
  const Var a = tape.constant(Tensor({2, 3}));
  const Var b = tape.constant(Tensor({2, 3}));
  try {
    (void)matmul(a, b);
    FAIL("matmul accepted mismatched shapes");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2,3]") != std::string::npos);
  }
  CHECK_THROWS_AS((void)add(a, tape.constant(Tensor({3, 2}))), ShapeError);
  CHECK_THROWS_AS((void)conv2d(tape.constant(Tensor({1, 2, 4, 4})), tape.constant(Tensor({1, 3, 3, 3}))), ShapeError);
}

TEST_CASE("every primitive and composed network passes the finite-difference check") {
  for (auto& c : lmcl::testing::gradient_cases()) {
    CAPTURE(c.name);
    const auto r = lmcl::testing::check_gradients(c.store, c.loss, c.per_tensor);
    INFO(r.worst);
    CHECK(r.ok());
  }
}

TEST_CASE("gru cell with zero weights keeps a zero state") {
  ParamStore store;
  Rng rng = derive_rng(1, 1);
  add_gru_params(store, "g", 3, 4, rng);
  for (std::size_t i = 0; i < store.size(); ++i) store.value(i).fill(0.0);
  Tape tape;
  const Var h = gru_cell(tape.constant(random_tensor({2, 3}, rng)), tape.constant(Tensor({2, 4})), bind_gru(tape, store, "g"));
  for (double v : h.value().data()) CHECK(v == 0.0);
}

TEST_CASE("single-step bigru equals one cell per direction") {
  ParamStore store;
  Rng rng = derive_rng(2, 2);
  add_gru_params(store, "f", 3, 4, rng);
  add_gru_params(store, "b", 3, 4, rng);
  Tape tape;
  const Var x = tape.constant(random_tensor({2, 3}, rng));
  const Var h0 = tape.constant(Tensor({2, 4}));
  const Var seq[] = {x};
  const auto st = bigru(seq, bind_gru(tape, store, "f"), bind_gru(tape, store, "b"));
  REQUIRE(st.forward.size() == 1);
  CHECK(st.forward[0].value() == gru_cell(x, h0, bind_gru(tape, store, "f")).value());
  CHECK(st.backward[0].value() == gru_cell(x, h0, bind_gru(tape, store, "b")).value());
}

TEST_CASE("bigru rejects an empty sequence") {
  ParamStore store;
  Rng rng = derive_rng(2, 2);
  add_gru_params(store, "f", 3, 4, rng);
  Tape tape;
  const auto w = bind_gru(tape, store, "f");
  CHECK_THROWS_AS(bigru({}, w, w), std::invalid_argument);
}

TEST_CASE("masked bigru rows match unpadded runs") {
  ParamStore store;
  Rng rng = derive_rng(9, 9);
  add_gru_params(store, "f", 2, 3, rng);
  add_gru_params(store, "b", 2, 3, rng);
  const Tensor x0 = random_tensor({2, 2}, rng), x1 = random_tensor({2, 2}, rng);
  Tape tape;
  const Var seq[] = {tape.constant(x0), tape.constant(x1)};
  Tensor m1({2, 3}, 1.0);
  for (std::size_t j = 0; j < 3; ++j) m1.at(1, j) = 0.0;
  const Var masks[] = {tape.constant(Tensor({2, 3}, 1.0)), tape.constant(m1)};
  const auto padded = bigru(seq, bind_gru(tape, store, "f"), bind_gru(tape, store, "b"), masks);
  // Row 1 alone, length 1.
  const Var solo[] = {tape.constant(Tensor({1, 2}, {x0.at(1, 0), x0.at(1, 1)}))};
  const auto ref = bigru(solo, bind_gru(tape, store, "f"), bind_gru(tape, store, "b"));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(padded.forward.back().value().at(1, j) == doctest::Approx(ref.forward.back().value().at(0, j)).epsilon(1e-14));
    CHECK(padded.backward.front().value().at(1, j) == doctest::Approx(ref.backward.front().value().at(0, j)).epsilon(1e-14));
  }
}

TEST_CASE("forward values are bit-identical across repeated runs") {
  auto run = [] {
    auto cases = lmcl::testing::gradient_cases();
    std::vector<double> out;
    for (auto& c : cases) {
      Tape tape;
      out.push_back(c.loss(tape, c.store).value().item());
    }
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("fan-in initialisation bounds") {
  Rng rng = derive_rng(0, 0);
  const Tensor w = fan_in_uniform({16, 8}, 16, rng);
  for (double v : w.data()) CHECK(std::abs(v) <= std::sqrt(1.0 / 16.0));
}

TEST_CASE("checkpoint round trip and corruption") {
  ParamStore store;
  Rng rng = derive_rng(5, 0);
  store.add("a.w", random_tensor({3, 4}, rng));
  store.add("b", random_tensor({2, 2, 2}, rng));
  std::stringstream buf;
  write_checkpoint(buf, store);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 8) == "LMCLCKPT");
  std::stringstream in(bytes);
  CHECK(read_checkpoint(in) == store);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_checkpoint(truncated), CheckpointError);
  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream bad_magic(bad);
  CHECK_THROWS_AS(read_checkpoint(bad_magic), CheckpointError);
}

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "scrl/mdp/finite_mdp.hpp"
#include "scrl/rng.hpp"

namespace scrl::sac {

// One environment transition.  `done` means physical termination only;
// time-limit truncation is stored as done = false so targets keep
// bootstrapping across it.
template <typename Scalar = double>
struct TransitionT {
  VectorX<Scalar> s;
  VectorX<Scalar> a;
  Scalar r = Scalar(0);
  VectorX<Scalar> s_next;
  bool done = false;
};

using Transition = TransitionT<double>;

// Minibatch in column-major sample layout: column b of every matrix belongs
// to the same transition, and done_mask is 1 where the episode terminated.
template <typename Scalar = double>
struct BatchT {
  MatrixX<Scalar> states;       // obs_dim x B
  MatrixX<Scalar> actions;      // act_dim x B
  RowVectorX<Scalar> rewards;   // 1 x B
  MatrixX<Scalar> next_states;  // obs_dim x B
  RowVectorX<Scalar> done_mask; // 1 x B, 0 or 1

  Eigen::Index size() const { return states.cols(); }
};

using Batch = BatchT<double>;

// Fixed-capacity ring of transitions in structure-of-arrays layout.  Uniform
// sampling with replacement draws one index per slot, in slot order, from the
// caller's stream, so a fixed seed and fixed contents give a fixed batch.
template <typename Scalar = double>
class ReplayBufferT {
 public:
  ReplayBufferT(int obs_dim, int act_dim, Eigen::Index capacity)
      : obs_dim_(obs_dim), act_dim_(act_dim), capacity_(capacity) {
    if (obs_dim < 1 || act_dim < 1)
      throw std::invalid_argument("replay: dimensions must be positive");
    if (capacity < 1)
      throw std::invalid_argument("replay: capacity must be positive");
    s_.resize(obs_dim, capacity);
    a_.resize(act_dim, capacity);
    r_.resize(capacity);
    s_next_.resize(obs_dim, capacity);
    done_.resize(capacity);
  }

  Eigen::Index size() const { return size_; }
  Eigen::Index capacity() const { return capacity_; }

  void add(const TransitionT<Scalar>& t) {
    if (t.s.size() != obs_dim_ || t.s_next.size() != obs_dim_)
      throw std::invalid_argument("replay: state dimension mismatch");
    if (t.a.size() != act_dim_)
      throw std::invalid_argument("replay: action dimension mismatch");
    if (!std::isfinite(t.r))
      throw std::invalid_argument("replay: reward must be finite");
    s_.col(head_) = t.s;
    a_.col(head_) = t.a;
    r_[head_] = t.r;
    s_next_.col(head_) = t.s_next;
    done_[head_] = t.done ? Scalar(1) : Scalar(0);
    head_ = (head_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
  }

  BatchT<Scalar> sample(Rng& rng, int batch_size) const {
    if (batch_size < 1)
      throw std::invalid_argument("replay: batch size must be positive");
    if (size_ == 0)
      throw std::invalid_argument("replay: sample from empty buffer");
    BatchT<Scalar> b;
    b.states.resize(obs_dim_, batch_size);
    b.actions.resize(act_dim_, batch_size);
    b.rewards.resize(batch_size);
    b.next_states.resize(obs_dim_, batch_size);
    b.done_mask.resize(batch_size);
    for (int k = 0; k < batch_size; ++k) {
      const Eigen::Index i = rng.uniform_int(size_);
      b.states.col(k) = s_.col(i);
      b.actions.col(k) = a_.col(i);
      b.rewards[k] = r_[i];
      b.next_states.col(k) = s_next_.col(i);
      b.done_mask[k] = done_[i];
    }
    return b;
  }

  // Direct slot access for tests and normalizer fitting (0 = oldest is not
  // guaranteed once the ring has wrapped; slots are storage order).
  TransitionT<Scalar> at(Eigen::Index slot) const {
    if (slot < 0 || slot >= size_)
      throw std::invalid_argument("replay: slot out of range");
    return {s_.col(slot), a_.col(slot), r_[slot], s_next_.col(slot),
            done_[slot] != Scalar(0)};
  }

  // All stored observations, one per column, for normalizer fitting.
  MatrixX<Scalar> observations() const { return s_.leftCols(size_); }

 private:
  int obs_dim_;
  int act_dim_;
  Eigen::Index capacity_;
  MatrixX<Scalar> s_, a_, s_next_;
  VectorX<Scalar> r_, done_;
  Eigen::Index size_ = 0;
  Eigen::Index head_ = 0;
};

using ReplayBuffer = ReplayBufferT<double>;

}  // namespace scrl::sac

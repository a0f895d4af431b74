#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "simdfs/gf256.hpp"

namespace simdfs::rs {

struct InvalidDims : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct LengthMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IndexOutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};
// Cannot happen for an MDS matrix; raised only on internal corruption.
struct SingularSelection : std::logic_error {
  using std::logic_error::logic_error;
};

// Systematic (k+m) x k encoding matrix. Rows 0..k-1 are the identity, parity
// rows come from a column-normalized Cauchy construction so that row k is all
// ones (m=1 degenerates to plain XOR parity) and every k x k row subset is
// invertible.
class EncodingMatrix {
 public:
  static EncodingMatrix build(int k, int m, const gf256::Tables& gf);

  int k() const { return k_; }
  int m() const { return m_; }

  std::uint8_t coeff(int row, int col) const {
    if (row < 0 || row >= k_ + m_ || col < 0 || col >= k_) {
      throw IndexOutOfRange("rs: matrix index out of range");
    }
    return rows_[static_cast<std::size_t>(row) * k_ + col];
  }

 private:
  EncodingMatrix(int k, int m, std::vector<std::uint8_t> rows)
      : k_(k), m_(m), rows_(std::move(rows)) {}

  int k_;
  int m_;
  std::vector<std::uint8_t> rows_;  // (k+m) x k, row major
};

// Whole-block encode: data is k chunks of equal length, returns the m parity
// chunks.
std::vector<std::vector<std::uint8_t>> encode_block(
    const EncodingMatrix& mat, const gf256::Tables& gf,
    const std::vector<std::vector<std::uint8_t>>& data);

// Per-packet contribution of data node j towards parity p: the payload scaled
// by the single matrix coefficient.
std::vector<std::uint8_t> intermediate_parity(const EncodingMatrix& mat,
                                              const gf256::Tables& gf,
                                              int data_node_index,
                                              int parity_index,
                                              std::span<const std::uint8_t> payload);

// XOR incoming into acc in place. Order-independent and associative.
void aggregate(std::span<std::uint8_t> acc,
               std::span<const std::uint8_t> incoming);

// Reconstruct the k data chunks from any k encoded chunks (given with their
// row indices). Exercised by tests and integrity checks; the simulated data
// path never decodes.
std::vector<std::vector<std::uint8_t>> recover(
    const EncodingMatrix& mat, const gf256::Tables& gf,
    const std::vector<std::pair<int, std::vector<std::uint8_t>>>& available);

}  // namespace simdfs::rs

#include "simdfs/rscodec.hpp"

#include <algorithm>

namespace simdfs::rs {

EncodingMatrix EncodingMatrix::build(int k, int m, const gf256::Tables& gf) {
  if (k < 1 || m < 0 || k + m > 255) {
    throw InvalidDims("rs: need 1 <= k, 0 <= m, k+m <= 255");
  }

  std::vector<std::uint8_t> rows(static_cast<std::size_t>(k + m) * k, 0);
  for (int i = 0; i < k; ++i) {
    rows[static_cast<std::size_t>(i) * k + i] = 1;
  }

  // Cauchy block C[p][j] = 1/(x_p ^ y_j) with x_p = p and y_j = m + j; the
  // two index sets are disjoint so every denominator is nonzero. Columns are
  // then divided by C[0][j], which keeps all square submatrices nonsingular
  // and turns the first parity row into all ones.
  for (int p = 0; p < m; ++p) {
    for (int j = 0; j < k; ++j) {
      const auto x = static_cast<std::uint8_t>(p);
      const auto y = static_cast<std::uint8_t>(m + j);
      const std::uint8_t c = gf.inv(gf256::add(x, y));
      // C[0][j] = 1/y since x_0 = 0, so dividing by it multiplies by y.
      rows[static_cast<std::size_t>(k + p) * k + j] = gf.mul(c, y);
    }
  }
  return EncodingMatrix(k, m, std::move(rows));
}

std::vector<std::vector<std::uint8_t>> encode_block(
    const EncodingMatrix& mat, const gf256::Tables& gf,
    const std::vector<std::vector<std::uint8_t>>& data) {
  const int k = mat.k();
  const int m = mat.m();
  if (static_cast<int>(data.size()) != k) {
    throw LengthMismatch("rs: expected k data chunks");
  }
  const std::size_t len = data.empty() ? 0 : data[0].size();
  for (const auto& chunk : data) {
    if (chunk.size() != len) {
      throw LengthMismatch("rs: data chunks must have equal length");
    }
  }

  std::vector<std::vector<std::uint8_t>> parity(
      m, std::vector<std::uint8_t>(len, 0));
  for (int p = 0; p < m; ++p) {
    auto& out = parity[p];
    for (int j = 0; j < k; ++j) {
      const std::uint8_t c = mat.coeff(k + p, j);
      if (c == 0) continue;
      const auto& in = data[j];
      for (std::size_t i = 0; i < len; ++i) {
        out[i] = gf256::add(out[i], gf.mul(c, in[i]));
      }
    }
  }
  return parity;
}

std::vector<std::uint8_t> intermediate_parity(const EncodingMatrix& mat,
                                              const gf256::Tables& gf,
                                              int data_node_index,
                                              int parity_index,
                                              std::span<const std::uint8_t> payload) {
  if (data_node_index < 0 || data_node_index >= mat.k() || parity_index < 0 ||
      parity_index >= mat.m()) {
    throw IndexOutOfRange("rs: chunk or parity index out of range");
  }
  const std::uint8_t c = mat.coeff(mat.k() + parity_index, data_node_index);
  std::vector<std::uint8_t> out(payload.size());
  for (std::size_t i = 0; i < payload.size(); ++i) {
    out[i] = gf.mul(c, payload[i]);
  }
  return out;
}

void aggregate(std::span<std::uint8_t> acc,
               std::span<const std::uint8_t> incoming) {
  if (acc.size() != incoming.size()) {
    throw LengthMismatch("rs: accumulator/input length mismatch");
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    acc[i] = gf256::add(acc[i], incoming[i]);
  }
}

std::vector<std::vector<std::uint8_t>> recover(
    const EncodingMatrix& mat, const gf256::Tables& gf,
    const std::vector<std::pair<int, std::vector<std::uint8_t>>>& available) {
  const int k = mat.k();
  if (static_cast<int>(available.size()) != k) {
    throw LengthMismatch("rs: recovery needs exactly k chunks");
  }
  const std::size_t len = available[0].second.size();
  for (const auto& [row, chunk] : available) {
    if (row < 0 || row >= k + mat.m()) {
      throw IndexOutOfRange("rs: row index out of range");
    }
    if (chunk.size() != len) {
      throw LengthMismatch("rs: chunks must have equal length");
    }
  }

  // Gauss-Jordan inversion of the selected k x k submatrix, applying the same
  // operations to an identity block.
  std::vector<std::uint8_t> a(static_cast<std::size_t>(k) * k);
  std::vector<std::uint8_t> inv(static_cast<std::size_t>(k) * k, 0);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) {
      a[static_cast<std::size_t>(r) * k + c] = mat.coeff(available[r].first, c);
    }
    inv[static_cast<std::size_t>(r) * k + r] = 1;
  }
  for (int col = 0; col < k; ++col) {
    int pivot = -1;
    for (int r = col; r < k; ++r) {
      if (a[static_cast<std::size_t>(r) * k + col] != 0) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) {
      throw SingularSelection("rs: singular submatrix in MDS code");
    }
    if (pivot != col) {
      for (int c = 0; c < k; ++c) {
        std::swap(a[static_cast<std::size_t>(pivot) * k + c],
                  a[static_cast<std::size_t>(col) * k + c]);
        std::swap(inv[static_cast<std::size_t>(pivot) * k + c],
                  inv[static_cast<std::size_t>(col) * k + c]);
      }
    }
    const std::uint8_t d = gf.inv(a[static_cast<std::size_t>(col) * k + col]);
    for (int c = 0; c < k; ++c) {
      a[static_cast<std::size_t>(col) * k + c] =
          gf.mul(a[static_cast<std::size_t>(col) * k + c], d);
      inv[static_cast<std::size_t>(col) * k + c] =
          gf.mul(inv[static_cast<std::size_t>(col) * k + c], d);
    }
    for (int r = 0; r < k; ++r) {
      if (r == col) continue;
      const std::uint8_t f = a[static_cast<std::size_t>(r) * k + col];
      if (f == 0) continue;
      for (int c = 0; c < k; ++c) {
        a[static_cast<std::size_t>(r) * k + c] = gf256::add(
            a[static_cast<std::size_t>(r) * k + c],
            gf.mul(f, a[static_cast<std::size_t>(col) * k + c]));
        inv[static_cast<std::size_t>(r) * k + c] = gf256::add(
            inv[static_cast<std::size_t>(r) * k + c],
            gf.mul(f, inv[static_cast<std::size_t>(col) * k + c]));
      }
    }
  }

  std::vector<std::vector<std::uint8_t>> out(
      k, std::vector<std::uint8_t>(len, 0));
  for (int r = 0; r < k; ++r) {
    auto& dst = out[r];
    for (int c = 0; c < k; ++c) {
      const std::uint8_t f = inv[static_cast<std::size_t>(r) * k + c];
      if (f == 0) continue;
      const auto& src = available[c].second;
      for (std::size_t i = 0; i < len; ++i) {
        dst[i] = gf256::add(dst[i], gf.mul(f, src[i]));
      }
    }
  }
  return out;
}

}  // namespace simdfs::rs

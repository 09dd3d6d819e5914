#include "xtalk/pauli.hpp"

#include <stdexcept>

namespace xtalk {

const Eigen::Matrix2cd& pauli_matrix(int letter) {
    static const Eigen::Matrix2cd ops[4] = {
        (Eigen::Matrix2cd() << 1, 0, 0, 1).finished(),
        (Eigen::Matrix2cd() << 0, 1, 1, 0).finished(),
        (Eigen::Matrix2cd() << 0, std::complex<double>(0, -1), std::complex<double>(0, 1), 0)
            .finished(),
        (Eigen::Matrix2cd() << 1, 0, 0, -1).finished(),
    };
    if (letter < 0 || letter > 3) throw std::invalid_argument("pauli_matrix: letter out of range");
    return ops[letter];
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c)
            out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    return out;
}

PauliString::PauliString(int n_qubits, std::vector<int> letters)
    : n(n_qubits), letters(std::move(letters)) {
    if (static_cast<int>(this->letters.size()) != n)
        throw std::invalid_argument("PauliString: one letter per qubit required");
    for (int l : this->letters)
        if (l < 0 || l > 3) throw std::invalid_argument("PauliString: letter out of range");
}

PauliString PauliString::single(int n_qubits, int qubit, Axis axis) {
    std::vector<int> ls(n_qubits, 0);
    ls.at(qubit) = axis_index(axis) + 1;
    return PauliString(n_qubits, std::move(ls));
}

PauliString PauliString::identity(int n_qubits) {
    return PauliString(n_qubits, std::vector<int>(n_qubits, 0));
}

PauliString PauliString::from_flat_index(int n_qubits, std::uint64_t index) {
    std::vector<int> ls(n_qubits, 0);
    for (int q = 0; q < n_qubits; ++q) {
        ls[q] = static_cast<int>(index % 4);
        index /= 4;
    }
    return PauliString(n_qubits, std::move(ls));
}

Eigen::MatrixXcd PauliString::matrix() const {
    Eigen::MatrixXcd out = pauli_matrix(letters.empty() ? 0 : letters[0]);
    if (letters.empty()) out = Eigen::MatrixXcd::Identity(1, 1);
    for (int q = 1; q < n; ++q) out = kron(out, pauli_matrix(letters[q]));
    return out;
}

bool PauliString::commutes_with_site(int qubit, int axis) const {
    const int l = letters.at(qubit);
    return l == 0 || l == axis + 1;
}

std::string PauliString::name() const {
    static const char* sym = "IXYZ";
    std::string s;
    for (int l : letters) s += sym[l];
    return s;
}

Eigen::MatrixXcd embed_site(int n_qubits, int qubit, const Eigen::Matrix2cd& op) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int q = 0; q < n_qubits; ++q) {
        if (q == qubit)
            out = kron(out, op);
        else
            out = kron(out, Eigen::Matrix2cd::Identity());
    }
    return out;
}

Eigen::MatrixXcd site_pauli(int n_qubits, int qubit, Axis axis) {
    return embed_site(n_qubits, qubit, pauli_matrix(axis_index(axis) + 1));
}

}  // namespace xtalk

// pauli.hpp — N-qubit Pauli strings and dense operator embedding.

#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xtalk/model.hpp"

namespace xtalk {

// Single-qubit Pauli by letter: 0 = I, 1 = X, 2 = Y, 3 = Z.
const Eigen::Matrix2cd& pauli_matrix(int letter);

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

// Hermitian unitary Pauli string (self-inverse); letters[q] in {0..3}.
struct PauliString {
    int n = 0;
    std::vector<int> letters;

    PauliString(int n_qubits, std::vector<int> letters);
    static PauliString single(int n_qubits, int qubit, Axis axis);
    static PauliString identity(int n_qubits);
    static PauliString from_flat_index(int n_qubits, std::uint64_t index);  // base-4 digits

    Eigen::MatrixXcd matrix() const;
    // True when the string commutes with sigma^axis on the given qubit
    // (letter is identity or equals the axis); axis in {0, 1, 2}.
    bool commutes_with_site(int qubit, int axis) const;
    std::string name() const;  // e.g. "IXZY"
};

// op acting on one site, identity elsewhere; dimension 2^n.
Eigen::MatrixXcd embed_site(int n_qubits, int qubit, const Eigen::Matrix2cd& op);
Eigen::MatrixXcd site_pauli(int n_qubits, int qubit, Axis axis);

}  // namespace xtalk

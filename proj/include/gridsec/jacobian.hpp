#pragma once

#include "gridsec/linalg.hpp"
#include "gridsec/network.hpp"

namespace gridsec {

/// DC measurement Jacobian H. Rows follow meter declaration order, columns
/// are the non-reference buses in ascending id order.
struct Jacobian {
    Matrix h;
    std::vector<std::string> row_ids;  // meter ids
    std::vector<BusId> col_buses;

    int rows() const { return h.rows(); }
    int cols() const { return h.cols(); }
};

/// Builds H: a flow-meter row for branch [i,j] with reactance x has +1/x at
/// column i and -1/x at column j (sign follows meter orientation, reference
/// column omitted); an injection row at bus i is the sum of the flow rows of
/// all incident real branches oriented out of i.
Jacobian build_jacobian(const PowerNetwork& net, const MeasurementPlacement& meas);

/// Exact-rational twin of build_jacobian; the test oracle for rank questions.
RatMatrix build_jacobian_exact(const PowerNetwork& net, const MeasurementPlacement& meas);

}  // namespace gridsec

#include "cssmpc/conic.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace cssmpc::conic {

ConicProgram::ConicProgram(int n_vars) : n_vars_(n_vars) {
    if (n_vars <= 0) throw std::invalid_argument("program needs at least one variable");
    objective_ = VectorXd::Zero(n_vars);
}

void ConicProgram::set_objective(VectorXd c) {
    if (c.size() != n_vars_) throw std::invalid_argument("objective size mismatch");
    objective_ = std::move(c);
}

void ConicProgram::add_block(ConeKind kind, int order, MatrixXd coeffs, VectorXd constants) {
    if (coeffs.rows() != constants.size() || coeffs.cols() != n_vars_)
        throw std::invalid_argument("cone block shape mismatch");
    if (constants.size() == 0) return;
    blocks_.push_back(ConeBlock{kind, order, std::move(coeffs), std::move(constants)});
}

void ConicProgram::add_zero(MatrixXd coeffs, VectorXd constants) {
    const int rows = static_cast<int>(constants.size());
    add_block(ConeKind::Zero, rows, std::move(coeffs), std::move(constants));
}

void ConicProgram::add_nonnegative(MatrixXd coeffs, VectorXd constants) {
    const int rows = static_cast<int>(constants.size());
    add_block(ConeKind::Nonnegative, rows, std::move(coeffs), std::move(constants));
}

void ConicProgram::add_second_order(MatrixXd coeffs, VectorXd constants) {
    if (constants.size() < 2)
        throw std::invalid_argument("second-order block needs at least two rows");
    const int rows = static_cast<int>(constants.size());
    add_block(ConeKind::SecondOrder, rows, std::move(coeffs), std::move(constants));
}

void ConicProgram::add_psd(MatrixXd coeffs, VectorXd constants, int order) {
    if (order <= 0 || constants.size() != svec_size(order))
        throw std::invalid_argument("psd block rows must equal order(order+1)/2");
    add_block(ConeKind::Psd, order, std::move(coeffs), std::move(constants));
}

namespace {

const char* kind_name(ConeKind kind) {
    switch (kind) {
        case ConeKind::Zero: return "zero";
        case ConeKind::Nonnegative: return "nonneg";
        case ConeKind::SecondOrder: return "soc";
        case ConeKind::Psd: return "psd";
    }
    return "?";
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string ConicProgram::dump() const {
    std::ostringstream out;
    out << "conic_program v1\n";
    out << "vars " << n_vars_ << "\n";
    out << "objective";
    for (int i = 0; i < n_vars_; ++i) out << " " << format_double(objective_[i]);
    out << "\n";
    for (const auto& block : blocks_) {
        out << "block " << kind_name(block.kind) << " " << block.rows() << " " << block.order
            << "\n";
        for (int i = 0; i < block.rows(); ++i) {
            for (int j = 0; j < n_vars_; ++j) {
                if (j) out << " ";
                out << format_double(block.coeffs(i, j));
            }
            out << " | " << format_double(block.constants[i]) << "\n";
        }
    }
    out << "end\n";
    return out.str();
}

ConicProgram ConicProgram::parse(const std::string& text) {
    std::istringstream in(text);
    std::string token;
    in >> token;
    if (token != "conic_program") throw std::invalid_argument("bad program header");
    in >> token;  // version
    in >> token;
    if (token != "vars") throw std::invalid_argument("expected vars");
    int n = 0;
    in >> n;
    ConicProgram program(n);
    in >> token;
    if (token != "objective") throw std::invalid_argument("expected objective");
    VectorXd c(n);
    for (int i = 0; i < n; ++i) in >> c[i];
    program.set_objective(std::move(c));

    while (in >> token) {
        if (token == "end") return program;
        if (token != "block") throw std::invalid_argument("expected block");
        std::string kind;
        int rows = 0, order = 0;
        in >> kind >> rows >> order;
        MatrixXd coeffs(rows, n);
        VectorXd constants(rows);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < n; ++j) in >> coeffs(i, j);
            in >> token;  // separator
            if (token != "|") throw std::invalid_argument("expected row separator");
            in >> constants[i];
        }
        if (kind == "zero")
            program.add_zero(std::move(coeffs), std::move(constants));
        else if (kind == "nonneg")
            program.add_nonnegative(std::move(coeffs), std::move(constants));
        else if (kind == "soc")
            program.add_second_order(std::move(coeffs), std::move(constants));
        else if (kind == "psd")
            program.add_psd(std::move(coeffs), std::move(constants), order);
        else
            throw std::invalid_argument("unknown cone kind: " + kind);
    }
    throw std::invalid_argument("missing end marker");
}

}  // namespace cssmpc::conic

#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

#include "boxplus/bulk.hpp"
#include "boxplus/locallaw.hpp"

namespace boxplus {

// CSV emission with pinned column sets. Numbers are written with 17
// significant digits so a reader parsing them back recovers the exact
// doubles; the byte-identical round trip of rerun outputs depends on it.

inline std::string csv_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "0x%016llx",
                  static_cast<unsigned long long>(v));
    return buf;
}

inline void write_bulk_csv(std::ostream& out, const BulkScan& scan) {
    out << "E,eta,re_m,im_m,density,re_omega1,im_omega1,re_omega2,"
           "im_omega2,gamma,in_bulk\n";
    for (const auto& row : scan.rows) {
        out << csv_double(row.E) << ',' << csv_double(row.eta) << ','
            << csv_double(row.m.real()) << ',' << csv_double(row.m.imag())
            << ',' << csv_double(row.density) << ','
            << csv_double(row.omega1.real()) << ','
            << csv_double(row.omega1.imag()) << ','
            << csv_double(row.omega2.real()) << ','
            << csv_double(row.omega2.imag()) << ','
            << csv_double(row.gamma) << ',' << (row.in_bulk ? 1 : 0)
            << '\n';
    }
}

inline void write_report_csv(std::ostream& out, const LocalLawReport& rep) {
    out << "sample,E,eta,N_eta_product,err_diag,err_offdiag,err_trace,"
           "err_omegaB,solver_iters,flags\n";
    const double n = double(rep.config.n);
    for (const auto& row : rep.rows) {
        out << row.sample << ',' << csv_double(row.e) << ','
            << csv_double(row.eta) << ',' << csv_double(n * row.eta) << ','
            << csv_double(row.err_diag) << ','
            << csv_double(row.err_offdiag) << ','
            << csv_double(row.err_trace) << ','
            << csv_double(row.err_omegab) << ',' << row.solver_iters << ','
            << (row.converged ? "ok" : "solver_failed") << '\n';
    }
}

inline void write_median_csv(std::ostream& out, const LocalLawReport& rep) {
    out << "E,eta,N_eta_product,med_diag,med_offdiag,med_trace,"
           "med_omegaB,n_ok\n";
    const double n = double(rep.config.n);
    for (const auto& med : rep.medians) {
        out << csv_double(med.e) << ',' << csv_double(med.eta) << ','
            << csv_double(n * med.eta) << ',' << csv_double(med.med_diag)
            << ',' << csv_double(med.med_offdiag) << ','
            << csv_double(med.med_trace) << ','
            << csv_double(med.med_omegab) << ',' << med.n_ok << '\n';
    }
}

}  // namespace boxplus

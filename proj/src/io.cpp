#include "nilflow/io.hpp"

#include <cstdio>
#include <fstream>

namespace nilflow::io {

json rat_to_json(const Rat& q) {
  json pair = json::array();
  if (q.get_num().fits_slong_p() && q.get_den().fits_slong_p()) {
    pair.push_back(q.get_num().get_si());
    pair.push_back(q.get_den().get_si());
  } else {
    pair.push_back(q.get_num().get_str());
    pair.push_back(q.get_den().get_str());
  }
  return pair;
}

json ratmat_to_json(const RatMat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(rat_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json cmat_to_json(const CMat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j).real());
      row.push_back(m(i, j).imag());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json conventions_block() {
  json c;
  c["orientation"] = "[Y, N] = 2N, [Y, N-] = -2N-, [N, N-] = Y";
  c["model_metric"] =
      "H0(theta, L) = U * diag_j(prod_i L_i^(a_i^j)) * U^H with "
      "U = exp((1/(2*pi)) * sum_i theta_i * N_i); the Gram matrix carries the "
      "full weights a_i^j";
  c["theta_period"] = "2*pi; equivariance H0(theta_i + 2*pi) = gamma_i o H0(theta_i)";
  c["section_transport"] =
      "loop i acts on section coordinates by v -> gamma_i^{-T} v; the "
      "section-level nilpotent is Nsec_i = -N_i^T and lowers weights by 2";
  c["riemannian_metric"] = "<A, B>_H = tr(H^{-1} A H^{-1} B)";
  c["chart"] = "z = r e^{i theta}, L = -log r > 1; cusp metric (dtheta^2 + dL^2)/L^2";
  return c;
}

json grading_to_json(const lie::CommutingGrading& g) {
  json out;
  out["tier"] = g.tier;
  out["basis"] = ratmat_to_json(g.basis);
  json n = json::array(), y = json::array(), nm = json::array(), w = json::array();
  for (size_t i = 0; i < g.N.size(); ++i) {
    n.push_back(ratmat_to_json(g.N[i]));
    y.push_back(ratmat_to_json(g.Y[i]));
    nm.push_back(ratmat_to_json(g.Nminus[i]));
    json wi = json::array();
    for (const auto& a : g.weights[i]) wi.push_back(rat_to_json(a));
    w.push_back(std::move(wi));
  }
  out["N"] = std::move(n);
  out["Y"] = std::move(y);
  out["Nminus"] = std::move(nm);
  out["weights"] = std::move(w);
  return out;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open for writing: " + path);
  os << content;
  if (!os) throw Error("write failed: " + path);
}

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

void write_field_csv(const std::string& path, const flow::EquivariantField& f) {
  const auto& g = f.grid();
  std::string out = "ix,iy,x,y";
  const int r = f.r();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      out += ",re_" + std::to_string(i) + std::to_string(j);
      out += ",im_" + std::to_string(i) + std::to_string(j);
    }
  out += "\n";
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      out += std::to_string(ix) + "," + std::to_string(iy) + ",";
      append_double(out, g.x(ix));
      out += ",";
      append_double(out, g.y(iy));
      const CMat& h = f.value(ix, iy);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          out += ",";
          append_double(out, h(i, j).real());
          out += ",";
          append_double(out, h(i, j).imag());
        }
      out += "\n";
    }
  write_text_file(path, out);
}

void write_scalar_csv(const std::string& path, const flow::ScalarField& f) {
  const auto& g = f.grid;
  std::string out = "ix,iy,x,y,u\n";
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      out += std::to_string(ix) + "," + std::to_string(iy) + ",";
      append_double(out, g.x(ix));
      out += ",";
      append_double(out, g.y(iy));
      out += ",";
      append_double(out, f.at(ix, iy));
      out += "\n";
    }
  write_text_file(path, out);
}

std::vector<RatMat> parse_generators_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("input is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("r") || !j.contains("k") || !j.contains("generators"))
    throw ValidationError("input must be an object with fields r, k, generators");
  const int r = j["r"].get<int>();
  const int k = j["k"].get<int>();
  if (r < 1 || k < 1) throw ValidationError("r and k must be positive");
  const auto& gens = j["generators"];
  if (!gens.is_array() || int(gens.size()) != k)
    throw ValidationError("generators must be an array of k matrices");
  std::vector<RatMat> out;
  for (const auto& gm : gens) {
    if (!gm.is_array() || int(gm.size()) != r)
      throw ValidationError("each generator must be an r x r integer matrix");
    std::vector<std::vector<long>> rows;
    for (const auto& row : gm) {
      if (!row.is_array() || int(row.size()) != r)
        throw ValidationError("each generator must be an r x r integer matrix");
      std::vector<long> rr;
      for (const auto& v : row) {
        if (!v.is_number_integer()) throw ValidationError("generator entries must be integers");
        rr.push_back(v.get<long>());
      }
      rows.push_back(std::move(rr));
    }
    out.push_back(RatMat::from_int_rows(rows));
  }
  return out;
}

}  // namespace nilflow::io

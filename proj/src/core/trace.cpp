#include "snorelab/core/trace.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace snorelab {

namespace {

constexpr const char* kHeader =
    "k,delta_k,lambda_k,sigma_k,residual,F_est,F_stderr,gradF_sq_est,gradF_sq_stderr,psnr";

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::runtime_error("trace CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

RunTrace RunTrace::truncated(std::uint64_t n) const {
  RunTrace out;
  out.meta = meta;
  for (const auto& r : records) {
    if (r.k <= n) out.records.push_back(r);
  }
  if (!out.records.empty()) out.records.back().residual = 0.0;
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_to_csv(const RunTrace& trace) {
  std::ostringstream os;
  const auto& m = trace.meta;
  os << "# snorelab-trace version=" << m.version << " config_hash=" << m.config_hash << " seed=" << m.seed
     << " run=" << m.run << " method=" << m.method << " aborted=" << (m.aborted ? 1 : 0) << '\n';
  for (const auto& note : m.notes) os << "# note: " << note << '\n';
  os << kHeader << '\n';
  for (const auto& r : trace.records) {
    os << r.k << ',' << format_double(r.delta) << ',' << format_double(r.lambda) << ',' << format_double(r.sigma)
       << ',' << format_double(r.residual) << ',' << format_double(r.f_est) << ',' << format_double(r.f_stderr)
       << ',' << format_double(r.grad_sq_est) << ',' << format_double(r.grad_sq_stderr) << ',';
    if (r.psnr) os << format_double(*r.psnr);
    os << '\n';
  }
  return os.str();
}

RunTrace parse_trace_csv(std::string_view text) {
  RunTrace trace;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = line.substr(1);
      if (body.starts_with(" note: ")) {
        trace.meta.notes.emplace_back(body.substr(7));
        continue;
      }
      for (const auto& tok : split(body, ' ')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "version") trace.meta.version = val;
        else if (key == "config_hash") trace.meta.config_hash = val;
        else if (key == "seed") trace.meta.seed = std::stoull(val);
        else if (key == "run") trace.meta.run = std::stoull(val);
        else if (key == "method") trace.meta.method = val;
        else if (key == "aborted") trace.meta.aborted = (val == "1");
      }
      continue;
    }
    if (!header_seen) {
      if (line != kHeader) throw std::runtime_error("trace CSV line " + std::to_string(line_no) + ": unexpected header");
      header_seen = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 10) {
      throw std::runtime_error("trace CSV line " + std::to_string(line_no) + ": expected 10 columns");
    }
    TraceRecord r;
    r.k = std::stoull(cols[0]);
    r.delta = parse_double(cols[1], line_no);
    r.lambda = parse_double(cols[2], line_no);
    r.sigma = parse_double(cols[3], line_no);
    r.residual = parse_double(cols[4], line_no);
    r.f_est = parse_double(cols[5], line_no);
    r.f_stderr = parse_double(cols[6], line_no);
    r.grad_sq_est = parse_double(cols[7], line_no);
    r.grad_sq_stderr = parse_double(cols[8], line_no);
    if (!cols[9].empty()) r.psnr = parse_double(cols[9], line_no);
    trace.records.push_back(r);
  }
  if (!header_seen) throw std::runtime_error("trace CSV: missing header");
  return trace;
}

}  // namespace snorelab

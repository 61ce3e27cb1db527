#include "selfstab/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unistd.h>

namespace selfstab {

void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path temp = path;
  temp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw PreconditionError("cannot open " + temp.string() + " for writing");
    try {
      body(out);
    } catch (...) {
      out.close();
      std::filesystem::remove(temp);
      throw;
    }
    out.flush();
    if (!out) {
      std::filesystem::remove(temp);
      throw PreconditionError("write to " + temp.string() + " failed");
    }
  }
  std::filesystem::rename(temp, path);
}

void write_path_csv(std::ostream& out, const std::vector<PathDump>& paths, int dim) {
  out << "trial,particle,step,time";
  for (int c = 1; c <= dim; ++c) out << ",x" << c;
  out << '\n';
  for (const auto& p : paths) {
    for (std::size_t k = 0; k < p.path->states.size(); ++k) {
      const Vec& x = p.path->states[k];
      if (x.size() != dim) throw PreconditionError("path state dimension mismatch");
      out << p.trial << ',' << p.particle << ',' << k << ',' << format_number(p.path->time(k));
      for (int c = 0; c < dim; ++c) out << ',' << format_number(x(c));
      out << '\n';
    }
  }
}

std::vector<PathSample> read_path_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("trial,particle,step,time,x1")) {
    throw PreconditionError("path CSV: unexpected header");
  }
  const int dim = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 3;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::size_t> index;
  std::vector<PathSample> paths;
  std::vector<std::vector<double>> times;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || end != cell.data() + cell.size()) {
        throw PreconditionError("path CSV line " + std::to_string(number) + ": bad number '" + cell + "'");
      }
      cells.push_back(v);
    }
    if (static_cast<int>(cells.size()) != 4 + dim) {
      throw PreconditionError("path CSV line " + std::to_string(number) + ": wrong column count");
    }
    const auto key = std::pair{static_cast<std::uint64_t>(cells[0]), static_cast<std::uint64_t>(cells[1])};
    auto [it, inserted] = index.emplace(key, paths.size());
    if (inserted) {
      paths.emplace_back();
      times.emplace_back();
    }
    Vec x(dim);
    for (int c = 0; c < dim; ++c) x(c) = cells[4 + c];
    paths[it->second].states.push_back(x);
    times[it->second].push_back(cells[3]);
  }
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& t = times[i];
    paths[i].t0 = t.front();
    paths[i].dt = t.size() > 1 ? (t.back() - t.front()) / static_cast<double>(t.size() - 1) : 0.0;
  }
  return paths;
}

}  // namespace selfstab

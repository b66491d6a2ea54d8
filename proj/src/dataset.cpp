#include "windemos/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace windemos {

std::string format_double(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(value)) {
    throw Error(ErrorCode::MalformedInput, "bad number: '" + text + "'");
  }
  return value;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(field);
  return out;
}

const char* kDatasetHeader = "station_id,valid_time,member_id,u,v,obs_u,obs_v";

struct RawCase {
  std::map<std::string, WindVector> members;  // member_id -> forecast
  bool has_obs = false;
  bool obs_set = false;
  WindVector obs;
  std::size_t rows = 0;
};

}  // namespace

std::vector<ForecastCase> load_dataset(const std::string& path, const LoadOptions& opts,
                                       LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedInput, "empty file: " + path);
  if (split_csv(line) != split_csv(kDatasetHeader)) {
    throw Error(ErrorCode::MalformedInput, "unexpected header in " + path);
  }

  const double unit = opts.knots_to_ms ? kKnotInMs : 1.0;
  LoadReport rep;
  std::map<std::pair<std::int64_t, std::string>, RawCase> cases;  // (time, station)
  std::vector<std::string> member_universe;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++rep.rows;
    const auto fields = split_csv(line);
    if (fields.size() != 7) {
      throw Error(ErrorCode::MalformedInput,
                  path + ":" + std::to_string(line_no) + ": expected 7 fields");
    }
    const std::string& station = fields[0];
    const std::string& member = fields[2];
    if (station.empty() || member.empty()) {
      throw Error(ErrorCode::MalformedInput,
                  path + ":" + std::to_string(line_no) + ": empty station or member id");
    }
    UtcTime t;
    WindVector w;
    bool has_obs = false;
    WindVector obs;
    try {
      t = parse_iso8601(fields[1]);
      w = {unit * parse_double(fields[3]), unit * parse_double(fields[4])};
      if (fields[5].empty() != fields[6].empty()) {
        throw Error(ErrorCode::MalformedInput, "partial observation");
      }
      if (!fields[5].empty()) {
        has_obs = true;
        obs = {unit * parse_double(fields[5]), unit * parse_double(fields[6])};
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedInput,
                  path + ":" + std::to_string(line_no) + ": " + e.what());
    }

    if (std::find(member_universe.begin(), member_universe.end(), member) ==
        member_universe.end()) {
      member_universe.push_back(member);
    }
    RawCase& rc = cases[{t.seconds, station}];
    if (rc.members.count(member)) {
      throw Error(ErrorCode::MalformedInput, path + ":" + std::to_string(line_no) +
                                                 ": duplicate member '" + member + "'");
    }
    rc.members[member] = w;
    ++rc.rows;
    if (has_obs) {
      if (rc.obs_set && (rc.obs.u != obs.u || rc.obs.v != obs.v)) {
        throw Error(ErrorCode::MalformedInput, path + ":" + std::to_string(line_no) +
                                                   ": observation differs between members");
      }
      rc.obs = obs;
      rc.obs_set = true;
      rc.has_obs = true;
    } else if (rc.obs_set) {
      throw Error(ErrorCode::MalformedInput, path + ":" + std::to_string(line_no) +
                                                 ": observation differs between members");
    }
  }
  if (member_universe.size() < 2) {
    throw Error(ErrorCode::DatasetShape, path + ": fewer than 2 ensemble members");
  }

  std::vector<ForecastCase> out;
  for (auto& [key, rc] : cases) {
    if (rc.members.size() != member_universe.size()) {
      ++rep.dropped_incomplete;
      rep.rows_dropped += rc.rows;
      continue;
    }
    if (opts.require_observations && !rc.has_obs) {
      ++rep.dropped_missing_obs;
      rep.rows_dropped += rc.rows;
      continue;
    }
    ForecastCase c;
    c.valid_time = UtcTime{key.first};
    c.station_id = key.second;
    for (const auto& id : member_universe) {
      c.ensemble.member_ids.push_back(id);
      c.ensemble.members.push_back(rc.members.at(id));
    }
    if (rc.has_obs) c.observation = rc.obs;
    rep.rows_kept += rc.rows;
    ++rep.cases_kept;
    out.push_back(std::move(c));
  }
  // std::map ordering already gives (valid_time, station_id).
  if (report) *report = rep;
  return out;
}

void write_dataset(const std::string& path, const std::vector<ForecastCase>& cases) {
  std::ofstream outf(path);
  if (!outf) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  outf << kDatasetHeader << "\n";
  std::vector<const ForecastCase*> sorted;
  sorted.reserve(cases.size());
  for (const auto& c : cases) sorted.push_back(&c);
  std::stable_sort(sorted.begin(), sorted.end(), [](const ForecastCase* a, const ForecastCase* b) {
    if (a->valid_time != b->valid_time) return a->valid_time < b->valid_time;
    return a->station_id < b->station_id;
  });
  for (const ForecastCase* c : sorted) {
    const std::string time = format_iso8601(c->valid_time);
    for (std::size_t i = 0; i < c->ensemble.members.size(); ++i) {
      const std::string member_id = i < c->ensemble.member_ids.size()
                                        ? c->ensemble.member_ids[i]
                                        : "m" + std::to_string(i + 1);
      outf << c->station_id << ',' << time << ',' << member_id << ','
           << format_double(c->ensemble.members[i].u) << ','
           << format_double(c->ensemble.members[i].v) << ',';
      if (c->observation) {
        outf << format_double(c->observation->u) << ',' << format_double(c->observation->v);
      } else {
        outf << ',';
      }
      outf << '\n';
    }
  }
  if (!outf) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

}  // namespace windemos

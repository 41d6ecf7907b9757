// Plain-text and CSV rendering of analytics tables.

#include <sstream>

#include "kashf/analytics.hpp"

namespace kashf {

namespace {

std::string fixed(double v, int precision) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << v;
  return out.str();
}

std::string opt(const std::optional<double>& v, int precision, std::string_view missing) {
  return v ? fixed(*v, precision) : std::string(missing);
}

std::size_t display_width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

std::string pad(std::string s, std::size_t width, bool left_align) {
  const std::size_t w = display_width(s);
  if (w >= width) return s;
  std::string fill(width - w, ' ');
  return left_align ? s + fill : fill + s;
}

std::string glyphs(Marker categories, Marker bidders) {
  std::string s;
  if (categories > 0) s += "⇑";
  if (categories < 0) s += "⇓";
  if (bidders > 0) s += "↑";
  if (bidders < 0) s += "↓";
  return s;
}

}  // namespace

std::string table_to_csv(const PersonaBidderTable& t, int precision) {
  std::ostringstream out;
  out << "persona";
  for (const auto& c : t.columns) out << ',' << c;
  out << ",Avg,Std\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out << to_string(t.rows[r]);
    for (const auto& cell : t.cells[r]) out << ',' << opt(cell.value, precision, "N/A");
    const auto& s = t.row_stats[r];
    out << ',' << (s ? fixed(s->mean, precision) : "N/A") << ',' << (s ? fixed(s->std, precision) : "N/A") << '\n';
  }
  out << "Avg";
  for (const auto& s : t.column_stats) out << ',' << (s ? fixed(s->mean, precision) : "N/A");
  out << ',' << (t.persona_summary ? fixed(t.persona_summary->mean, precision) : "N/A");
  out << ',' << (t.bidder_summary ? fixed(t.bidder_summary->mean, precision) : "N/A") << '\n';
  out << "Std";
  for (const auto& s : t.column_stats) out << ',' << (s ? fixed(s->std, precision) : "N/A");
  out << ',' << (t.persona_summary ? fixed(t.persona_summary->std, precision) : "N/A");
  out << ',' << (t.bidder_summary ? fixed(t.bidder_summary->std, precision) : "N/A") << '\n';
  return out.str();
}

std::string table_to_text(const PersonaBidderTable& t, int precision, std::string_view missing) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{""};
  header.insert(header.end(), t.columns.begin(), t.columns.end());
  header.push_back("Avg.");
  header.push_back("Std.");
  grid.push_back(header);

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<std::string> line{std::string(to_string(t.rows[r]))};
    for (const auto& cell : t.cells[r]) {
      line.push_back(cell.value ? fixed(*cell.value, precision) + glyphs(cell.among_categories, cell.among_bidders)
                                : std::string(missing));
    }
    const auto& s = t.row_stats[r];
    line.push_back(s ? fixed(s->mean, precision) + glyphs(t.row_avg_marker[r], 0) : std::string(missing));
    line.push_back(s ? fixed(s->std, precision) : std::string(missing));
    grid.push_back(std::move(line));
  }
  std::vector<std::string> avg{"Avg."}, sd{"Std."};
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    const auto& s = t.column_stats[c];
    avg.push_back(s ? fixed(s->mean, precision) + glyphs(0, t.column_avg_marker[c]) : std::string(missing));
    sd.push_back(s ? fixed(s->std, precision) : std::string(missing));
  }
  avg.push_back(t.persona_summary ? fixed(t.persona_summary->mean, precision) : std::string(missing));
  avg.push_back(t.bidder_summary ? fixed(t.bidder_summary->mean, precision) : std::string(missing));
  sd.push_back(t.persona_summary ? fixed(t.persona_summary->std, precision) : std::string(missing));
  sd.push_back(t.bidder_summary ? fixed(t.bidder_summary->std, precision) : std::string(missing));
  const std::size_t body_end = grid.size();
  grid.push_back(std::move(avg));
  grid.push_back(std::move(sd));

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : grid) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], display_width(line[i]));
  }
  std::ostringstream out;
  out << t.title << '\n';
  auto rule = [&] {
    std::size_t total = 0;
    for (std::size_t w : width) total += w + 2;
    out << std::string(total, '-') << '\n';
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i == 1 || i == body_end) rule();
    for (std::size_t c = 0; c < grid[i].size(); ++c) out << pad(grid[i][c], width[c], c == 0) << "  ";
    out << '\n';
  }
  out << "⇑/⇓: beyond ±1 std among categories; ↑/↓: beyond ±1 std among bidders\n";
  return out.str();
}

std::string zero_bids_csv(const ZeroBidSummary& s) {
  std::ostringstream out;
  out << "bidder,zeros_no_intent,bids_no_intent,pct_no_intent,zeros_intent,bids_intent,pct_intent,pct_total,"
         "chi_square,significant\n";
  auto line = [&](const ZeroBidRow& r) {
    out << r.bidder << ',' << r.zeros_no_intent << ',' << r.bids_no_intent << ',' << opt(r.pct_no_intent, 2, "N/A")
        << ',' << r.zeros_intent << ',' << r.bids_intent << ',' << opt(r.pct_intent, 2, "N/A") << ','
        << opt(r.pct_total, 2, "N/A") << ',' << opt(r.test.statistic, 4, "undefined") << ','
        << (r.test.significant ? 1 : 0) << '\n';
  };
  for (const auto& r : s.bidders) line(r);
  line(s.overall);
  return out.str();
}

std::string zero_bids_text(const ZeroBidSummary& s) {
  std::ostringstream out;
  out << "Zero bids (%)\n";
  out << pad("Bidder", 12, true) << pad("No-intent", 11, false) << pad("Intent", 9, false)
      << pad("Total", 9, false) << '\n';
  auto line = [&](const ZeroBidRow& r) {
    out << pad(r.bidder + (r.test.significant ? "*" : ""), 12, true) << pad(opt(r.pct_no_intent, 2, "N/A"), 11, false)
        << pad(opt(r.pct_intent, 2, "N/A"), 9, false) << pad(opt(r.pct_total, 2, "N/A"), 9, false) << '\n';
  };
  for (const auto& r : s.bidders) line(r);
  out << std::string(41, '-') << '\n';
  line(s.overall);
  out << "*: intent arm differs at the 0.05 level (chi-square, 1 df)\n";
  return out.str();
}

}  // namespace kashf

#include "agrame/losses.hpp"

#include <algorithm>
#include <cmath>

#include "agrame/scorer.hpp"
#include "agrame/text.hpp"

namespace agrame {
namespace {

void check_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorKind::InvalidArgument, "temperature must be positive");
}

void check_distribution(std::span<const double> p, const char* which) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::InvalidArgument, std::string(which) + " entry outside [0,1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorKind::InvalidArgument, std::string(which) + " does not sum to 1");
}

// (student - teacher) / temperature, the KL gradient with respect to logits.
void accumulate_logit_grad(std::span<const double> student_p, std::span<const double> teacher_p, double temperature,
                           double weight, std::vector<double>& out) {
  out.resize(student_p.size(), 0.0);
  for (std::size_t k = 0; k < student_p.size(); ++k) out[k] += weight * (student_p[k] - teacher_p[k]) / temperature;
}

}  // namespace

void TeacherScores::validate(std::span<const std::size_t> sentences_per_passage) const {
  if (passage_scores.size() != sentences_per_passage.size())
    throw Error(ErrorKind::InvalidArgument, "teacher passage score count does not match the passage set");
  if (sentence_scores.size() != sentences_per_passage.size())
    throw Error(ErrorKind::InvalidArgument, "teacher sentence score lists do not match the passage set");
  for (std::size_t i = 0; i < sentences_per_passage.size(); ++i) {
    if (sentence_scores[i].size() != sentences_per_passage[i])
      throw Error(ErrorKind::InvalidArgument, "teacher sentence scores for passage " + std::to_string(i) +
                                                  " do not match its sentence count");
    for (double v : sentence_scores[i])
      if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite teacher score");
  }
  for (double v : passage_scores)
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite teacher score");
}

std::vector<double> softmax_dist(std::span<const double> scores, double temperature) {
  if (scores.empty()) throw Error(ErrorKind::InvalidArgument, "softmax of an empty score list");
  check_temperature(temperature);
  double hi = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double z = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp((scores[k] - hi) / temperature);
    z += out[k];
  }
  for (double& v : out) v /= z;
  return out;
}

double kl_div(std::span<const double> teacher, std::span<const double> student) {
  if (teacher.size() != student.size()) throw Error(ErrorKind::InvalidArgument, "length mismatch");
  check_distribution(teacher, "teacher");
  check_distribution(student, "student");
  double acc = 0.0;
  for (std::size_t k = 0; k < teacher.size(); ++k) {
    if (teacher[k] == 0.0) continue;
    if (student[k] == 0.0) throw Error(ErrorKind::InvalidArgument, "support mismatch");
    acc += teacher[k] * std::log(teacher[k] / student[k]);
  }
  // Rounding can leave a tiny negative value for equal distributions.
  return std::max(acc, 0.0);
}

double passage_loss(std::span<const double> student_scores, std::span<const double> teacher_scores,
                    double temperature) {
  if (student_scores.size() != teacher_scores.size()) throw Error(ErrorKind::InvalidArgument, "length mismatch");
  return kl_div(softmax_dist(teacher_scores, temperature), softmax_dist(student_scores, temperature));
}

double sentence_loss_per_passage(std::span<const double> student_sentence_scores,
                                 std::span<const double> teacher_sentence_scores, double temperature) {
  if (student_sentence_scores.size() != teacher_sentence_scores.size())
    throw Error(ErrorKind::InvalidArgument, "length mismatch");
  if (student_sentence_scores.size() <= 1) {
    check_temperature(temperature);
    return 0.0;
  }
  return passage_loss(student_sentence_scores, teacher_sentence_scores, temperature);
}

double aggregate_sentence_loss(std::span<const double> per_passage_l_s, std::span<const double> teacher_passage_scores,
                               double temperature) {
  if (per_passage_l_s.size() != teacher_passage_scores.size())
    throw Error(ErrorKind::InvalidArgument, "length mismatch");
  auto w = softmax_dist(teacher_passage_scores, temperature);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * per_passage_l_s[i];
  return acc;
}

LossReport loss_from_scores(const StudentScores& student, const TeacherScores& teacher, double temperature,
                            LossGradient* gradient) {
  const std::size_t n = student.passage.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "a passage set needs at least two passages");
  if (student.sentence.size() != n) throw Error(ErrorKind::InvalidArgument, "student sentence lists do not match");
  std::vector<std::size_t> layout(n);
  for (std::size_t i = 0; i < n; ++i) layout[i] = student.sentence[i].size();
  teacher.validate(layout);

  LossReport report;
  auto t_psg = softmax_dist(teacher.passage_scores, temperature);
  auto s_psg = softmax_dist(student.passage, temperature);
  report.l_psg = kl_div(t_psg, s_psg);

  report.per_passage_l_s.resize(n, 0.0);
  if (gradient) {
    gradient->passage.assign(n, 0.0);
    gradient->sentence.assign(n, {});
    accumulate_logit_grad(s_psg, t_psg, temperature, 1.0, gradient->passage);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (gradient) gradient->sentence[i].assign(layout[i], 0.0);
    if (layout[i] <= 1) continue;
    auto t = softmax_dist(teacher.sentence_scores[i], temperature);
    auto s = softmax_dist(student.sentence[i], temperature);
    report.per_passage_l_s[i] = kl_div(t, s);
    if (gradient) accumulate_logit_grad(s, t, temperature, t_psg[i], gradient->sentence[i]);
  }
  for (std::size_t i = 0; i < n; ++i) report.l_sent += t_psg[i] * report.per_passage_l_s[i];
  report.total = report.l_psg + report.l_sent;
  return report;
}

LossReport total_loss(const PassageSet& set, const TeacherScores& teacher, const StudentScorer& scorer,
                      const RankingConfig& cfg) {
  cfg.validate();
  StudentScores student = scorer(set);
  return loss_from_scores(student, teacher, cfg.temperature);
}

StudentScorer maxsim_student(const QueryEncoding& query_default, const QueryEncoding& query_prime) {
  return [&query_default, &query_prime](const PassageSet& set) {
    StudentScores s;
    for (const auto& p : set.passages) {
      s.passage.push_back(score_passage(query_default, p));
      auto& sent = s.sentence.emplace_back();
      for (std::size_t j = 0; j < p.sentences.size(); ++j)
        sent.push_back(score_sentence_in_passage(query_prime, p, j));
    }
    return s;
  };
}

std::vector<int> synth_sentence_labels(std::span<const std::string> sentences, const std::string& answer) {
  std::string needle = normalize_text(answer);
  if (needle.empty()) throw Error(ErrorKind::InvalidArgument, "empty answer");
  std::vector<int> labels;
  labels.reserve(sentences.size());
  for (const auto& s : sentences) labels.push_back(normalize_text(s).find(needle) != std::string::npos ? 1 : 0);
  return labels;
}

}  // namespace agrame

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "agrame/core.hpp"

namespace agrame {

// (k+1)-way passage set for one query. Losses need no positive label; the
// teacher scores carry all supervision.
struct PassageSet {
  std::string query_id;
  std::vector<PassageRecord> passages;
};

struct TeacherScores {
  std::vector<double> passage_scores;               // one per passage
  std::vector<std::vector<double>> sentence_scores;  // per passage, one per sentence

  // Throws Error(InvalidArgument) when shapes disagree with the layout
  // (sentence counts per passage) or any score is non-finite.
  void validate(std::span<const std::size_t> sentences_per_passage) const;
};

struct StudentScores {
  std::vector<double> passage;
  std::vector<std::vector<double>> sentence;
};

struct LossReport {
  double l_psg = 0.0;
  std::vector<double> per_passage_l_s;
  double l_sent = 0.0;
  double total = 0.0;
};

// d(total)/d(student score), same layout as StudentScores.
struct LossGradient {
  std::vector<double> passage;
  std::vector<std::vector<double>> sentence;
};

// Softmax of scores / temperature with max subtraction.
std::vector<double> softmax_dist(std::span<const double> scores, double temperature = 1.0);

// Forward KL, teacher first: sum t * ln(t / s). Zero-mass teacher entries
// contribute nothing; student zeros under teacher mass are a support mismatch.
double kl_div(std::span<const double> teacher, std::span<const double> student);

double passage_loss(std::span<const double> student_scores, std::span<const double> teacher_scores,
                    double temperature = 1.0);

// Within-passage sentence KL. A single-sentence passage yields 0.
double sentence_loss_per_passage(std::span<const double> student_sentence_scores,
                                 std::span<const double> teacher_sentence_scores, double temperature = 1.0);

// sum_i softmax(teacher passage scores)_i * per_passage_l_s[i]
double aggregate_sentence_loss(std::span<const double> per_passage_l_s,
                               std::span<const double> teacher_passage_scores, double temperature = 1.0);

// The full loss stack over precomputed student scores.
LossReport loss_from_scores(const StudentScores& student, const TeacherScores& teacher, double temperature,
                            LossGradient* gradient = nullptr);

using StudentScorer = std::function<StudentScores(const PassageSet&)>;

LossReport total_loss(const PassageSet& set, const TeacherScores& teacher, const StudentScorer& scorer,
                      const RankingConfig& cfg);

// Passage scores with the default-marker query, in-passage sentence scores
// with the sentence-marker query.
StudentScorer maxsim_student(const QueryEncoding& query_default, const QueryEncoding& query_prime);

// 1 iff the sentence contains the answer after normalization.
std::vector<int> synth_sentence_labels(std::span<const std::string> sentences, const std::string& answer);

}  // namespace agrame

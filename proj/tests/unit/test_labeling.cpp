#include "../common/corpus.hpp"
#include "helpers.hpp"

namespace planprobe {
namespace {

using testing::TempDir;

std::optional<ExclusionReason> reason(const LabelOutcome& o) { return o.exclusion_reason(); }

TEST(Labeling, ResponseLengthRule) {
  EXPECT_EQ(label_response_length(42, true).value(), 42);
  EXPECT_EQ(label_response_length(1000, true).value(), 1000);
  EXPECT_EQ(reason(label_response_length(1001, true)), ExclusionReason::kTooLong);
  EXPECT_EQ(reason(label_response_length(5, false)), ExclusionReason::kIncomplete);
  EXPECT_EQ(reason(label_response_length(1200, false)), ExclusionReason::kTooLong);
  WhitespaceTokenizer ws;
  EXPECT_EQ(label_response_length("one two  three\nfour", ws, 1000, true).value(), 4);
}

TEST(Labeling, ReasoningStepsCountsDistinctMarkers) {
  EXPECT_EQ(label_reasoning_steps("Step 1: a. Step 2: b. Step 3: c.").value(), 3);
  EXPECT_EQ(label_reasoning_steps("1. a\n2. b\n  3. c\n4. d").value(), 4);
  EXPECT_EQ(label_reasoning_steps("STEP 2: x. step 2: y.").value(), 1);
  EXPECT_EQ(label_reasoning_steps("Pi is about 3.14 and that is all.").value(), 0);
  std::string nine;
  for (int i = 1; i <= 9; ++i) nine += "Step " + std::to_string(i) + ": go. ";
  EXPECT_EQ(reason(label_reasoning_steps(nine)), ExclusionReason::kTooManySteps);
  EXPECT_EQ(label_reasoning_steps(nine, 9).value(), 9);
}

TEST(Labeling, CharacterChoiceRule) {
  const auto lex = Lexicon::defaults();
  const std::vector<std::string> classes{"fox", "cat", "owl", "dog"};
  EXPECT_EQ(label_character_choice("Once there was a little fox.", classes, lex).value(), 0);
  EXPECT_EQ(label_character_choice("Once there were two dogs and a dog.", classes, lex).value(), 3);
  EXPECT_EQ(reason(label_character_choice("Once there was a fox and a cat.", classes, lex)),
            ExclusionReason::kMultipleEntities);
  EXPECT_EQ(reason(label_character_choice("The cat sat on the mat.", classes, lex)), ExclusionReason::kEntityTooEarly);
  EXPECT_EQ(reason(label_character_choice("Nothing alive here at all.", classes, lex)), ExclusionReason::kNoEntity);
  EXPECT_EQ(reason(label_character_choice("Once upon a time a catalog arrived.", classes, lex)),
            ExclusionReason::kNoEntity);
  const auto hit = label_character_choice("Once upon a time an owl sang.", classes, lex);
  EXPECT_EQ(hit.key_char(), std::optional<std::size_t>(20));
}

TEST(Labeling, TopClassesBreakTiesLexicographically) {
  const auto lex = Lexicon::defaults();
  const std::vector<std::string> corpus{"a fox", "a fox", "one owl", "one cat", "a dog", "a bear", "a fox and a cat"};
  EXPECT_EQ(derive_top_classes(corpus, lex, 3), (std::vector<std::string>{"fox", "bear", "cat"}));
  EXPECT_EQ(testing::kind_of([&] { derive_top_classes(corpus, lex, 7); }), ErrorKind::kConfig);
}

TEST(Labeling, MultipleChoiceRule) {
  EXPECT_EQ(label_multiple_choice("Let me think. The answer is (C).").value(), 2);
  EXPECT_EQ(label_multiple_choice("Thinking it over, answer: e").value(), 4);
  EXPECT_EQ(label_multiple_choice("Clearly, option B is correct, so the answer is B.").value(), 1);
  EXPECT_EQ(reason(label_multiple_choice("The answer is B.")), ExclusionReason::kAnswerAtStart);
  EXPECT_EQ(reason(label_multiple_choice("Maybe the answer is A, or the answer is D.")),
            ExclusionReason::kMultipleAnswers);
  EXPECT_EQ(reason(label_multiple_choice("I cannot decide between them.")), ExclusionReason::kNoAnswer);
  EXPECT_EQ(reason(label_multiple_choice("Surely the answer is Apples.")), ExclusionReason::kNoAnswer);
  EXPECT_EQ(label_multiple_choice("So the answer is F.", 6).value(), 5);
}

TEST(Labeling, AnswerConfidenceComparesWithGold) {
  EXPECT_EQ(label_answer_confidence("I think the answer is B.", "B").value(), 1);
  EXPECT_EQ(label_answer_confidence("I think the answer is B.", "c").value(), 0);
  EXPECT_EQ(testing::kind_of([&] { label_answer_confidence("I think the answer is B.", "Z"); }), ErrorKind::kData);
}

TEST(Labeling, FactualConsistencyRule) {
  EXPECT_EQ(label_factual_consistency("Well, I agree with it.", true).value(), 1);
  EXPECT_EQ(label_factual_consistency("Well, I agree with it.", false).value(), 0);
  EXPECT_EQ(label_factual_consistency("Honestly I don\xE2\x80\x99t agree.", false).value(), 1);
  EXPECT_EQ(reason(label_factual_consistency("I agree but I disagree.", true)), ExclusionReason::kNoStance);
  EXPECT_EQ(reason(label_factual_consistency("Who knows.", true)), ExclusionReason::kNoStance);
  EXPECT_EQ(parse_truth(" TRUE "), std::optional<bool>(true));
  EXPECT_EQ(parse_truth("0"), std::optional<bool>(false));
  EXPECT_FALSE(parse_truth("maybe").has_value());
}

TEST(Labeling, VerbalizedEstimateTakesFirstWellFormedSpan) {
  EXPECT_EQ(parse_verbalized_estimate("about [TOKENS]120[/TOKENS]"), std::optional<std::int64_t>(120));
  EXPECT_EQ(parse_verbalized_estimate("[TOKENS]x[/TOKENS] then [TOKENS] 7 [/TOKENS]"),
            std::optional<std::int64_t>(7));
  EXPECT_FALSE(parse_verbalized_estimate("[TOKENS]-3[/TOKENS]").has_value());
  EXPECT_FALSE(parse_verbalized_estimate("[TOKENS]12").has_value());
  EXPECT_FALSE(parse_verbalized_estimate("twelve").has_value());
}

TEST(Labeling, TruncatedRecordsGetRemainingValues) {
  WhitespaceTokenizer ws;
  LabelContext ctx;
  ctx.task = TaskDefinition::make(TaskId::kResponseLength);
  ctx.tokenizer = &ws;
  LabelInput in;
  in.response = "a b c d e f g h i j";
  in.token_count = 10;
  in.truncation_offset = 4;
  EXPECT_EQ(label_example(ctx, in).value(), 6);
  ctx.task.params.length_mode = LengthMode::kTotal;
  EXPECT_EQ(label_example(ctx, in).value(), 10);
  in.token_count = 7;
  EXPECT_EQ(reason(label_example(ctx, in)), ExclusionReason::kTooShort);
}

TEST(Labeling, LabelOutcomeIsValueXorExclusion) {
  const auto v = LabelOutcome::of(3);
  EXPECT_FALSE(v.is_excluded());
  EXPECT_FALSE(v.exclusion_reason().has_value());
  const auto x = LabelOutcome::excluded(ExclusionReason::kNoStance);
  EXPECT_TRUE(x.is_excluded());
  EXPECT_FALSE(x.maybe_value().has_value());
  EXPECT_EQ(testing::kind_of([&] { (void)x.value(); }), ErrorKind::kData);
}

TEST(Labeling, PatternParsingErrors) {
  EXPECT_EQ(testing::kind_of([] { AnswerPatternSet::parse("# only a comment\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(testing::kind_of([] { StancePatternSet::parse("agree: yes\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(testing::kind_of([] { StancePatternSet::parse("maybe: hmm\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(testing::kind_of([] { AnswerPatternSet::parse("re:([<L>\n"); }), ErrorKind::kConfig);
  const auto custom = AnswerPatternSet::parse("my pick is <L>\n", 4);
  EXPECT_EQ(label_multiple_choice("Hmm, my pick is D.", custom).value(), 3);
  EXPECT_EQ(reason(label_multiple_choice("Hmm, my pick is E.", custom)), ExclusionReason::kNoAnswer);
}

TEST(Labeling, ShippedDataFilesEqualBuiltInDefaults) {
  const std::filesystem::path data(PLANPROBE_DATA_DIR);
  EXPECT_EQ(detail::read_text_file(data / "answer_patterns.txt"), kDefaultAnswerPatterns);
  EXPECT_EQ(detail::read_text_file(data / "stance_patterns.txt"), kDefaultStancePatterns);
  EXPECT_EQ(detail::read_text_file(data / "animals.txt"), kDefaultAnimalLexicon);
}

TEST(Labeling, CorpusLabelsExactlyAsAnnotated) {
  const auto r = testing::check_labeling_corpus(std::filesystem::path(PLANPROBE_TEST_DATA_DIR) / "labeling_corpus.json");
  for (const auto& m : r.mismatches) ADD_FAILURE() << m;
  EXPECT_GE(r.cases, 60u);
  EXPECT_EQ(r.per_task.size(), 6u);
  for (const auto& [task, n] : r.per_task) EXPECT_GE(n, 10) << task;
  EXPECT_EQ(r.reasons.size(), std::size(kAllExclusionReasons));
}

TEST(Labeling, LabelDatasetEmitsKeyTokensAndAugmentOffsets) {
  TempDir dir;
  DatasetHeader h;
  h.layer_count = 3;
  h.hidden_dim = 2;
  h.task_id = "multiple_choice";
  const std::vector<std::string> responses = {
      "We compare every option here and at last the answer is B.",
      "The answer is C.",
      "No idea which one is right, honestly, sorry about that.",
  };
  std::vector<ActivationRecord> records;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    ActivationRecord r;
    r.example_id = i;
    r.group_id = i;
    r.response_text = responses[i];
    r.response_token_count = static_cast<std::uint32_t>(WhitespaceTokenizer().count(responses[i]));
    r.activations.assign(6, 0.5f);
    records.push_back(r);
  }
  ActivationRecord trunc = records[0];
  trunc.example_id = 10;
  trunc.truncation_offset = 2;
  records.push_back(trunc);
  write_dataset(h, records, dir / "mc.bin");

  LabelingOptions o;
  o.task = TaskDefinition::make(TaskId::kMultipleChoice);
  o.augment.seed = 9;
  const auto labels = label_dataset(dir / "mc.bin", o);
  ASSERT_EQ(labels.labels.size(), 4u);
  EXPECT_EQ(labels.source_sha256, sha256_file(dir / "mc.bin"));
  const auto& first = labels.labels[0];
  EXPECT_EQ(first.value, std::optional<double>(1));
  // "the" of "the answer is B." is whitespace token 8.
  EXPECT_EQ(first.key_token, std::optional<std::int64_t>(8));
  EXPECT_EQ(first.augment_offsets, augment_by_truncation(8, 3, derive_seed(9, 0), 3));
  EXPECT_EQ(labels.labels[1].excluded, ExclusionReason::kAnswerAtStart);
  EXPECT_EQ(labels.labels[2].excluded, ExclusionReason::kNoAnswer);
  EXPECT_TRUE(labels.labels[3].augment_offsets.empty());
  EXPECT_EQ(labels.labels[3].truncation_offset, 2);
  EXPECT_EQ(labels.labels[3].value, std::optional<double>(1));

  save_labels(dir / "l.json", labels);
  EXPECT_EQ(load_labels(dir / "l.json"), labels);
}

}  // namespace
}  // namespace planprobe

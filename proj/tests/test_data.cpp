#include "adns/data.hpp"
#include "adns/error.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace adns;
using adns::testing_util::TempDir;

namespace {

bool linearly_separable_by_centroids(const TaskDataset& d) {
    // Nearest-centroid is a linear rule; with zero noise every point sits on its centroid.
    std::vector<Vector> centroid(d.class_count, Vector(d.features.cols(), 0.0));
    std::vector<std::size_t> count(d.class_count, 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t c = 0; c < d.features.cols(); ++c) centroid[d.labels[i]][c] += d.features(i, c);
        ++count[d.labels[i]];
    }
    for (std::size_t k = 0; k < d.class_count; ++k)
        for (double& v : centroid[k]) v /= static_cast<double>(count[k]);
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t k = 0; k < d.class_count; ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < d.features.cols(); ++c) s += (d.features(i, c) - centroid[k][c]) * (d.features(i, c) - centroid[k][c]);
            if (s < best_d) best_d = s, best = k;
        }
        if (best != d.labels[i]) return false;
    }
    return true;
}

}  // namespace

TEST(ParseCsv, HandConstructedFile) {
    CsvOptions o;
    o.label_column = std::string("label");
    LabeledDataset d = parse_csv("x,y,label\n0,0,a\n1,1,b\n2,2,a\n", o);
    EXPECT_EQ(d.labels, (std::vector<std::size_t>{0, 1, 0}));
    EXPECT_EQ(d.features.rows(), 3u);
    EXPECT_EQ(d.features.cols(), 2u);
    EXPECT_EQ(d.label_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(d.features(2, 1), 2.0);
}

TEST(ParseCsv, LabelByIndexWithoutHeader) {
    CsvOptions o;
    o.header = false;
    o.label_column = std::size_t{2};
    LabeledDataset d = parse_csv("0.5,1e-3,cat\n-1,2,dog\n", o);
    EXPECT_EQ(d.labels, (std::vector<std::size_t>{0, 1}));
    EXPECT_DOUBLE_EQ(d.features(0, 1), 1e-3);
}

TEST(ParseCsv, ErrorsCarryLineNumbers) {
    CsvOptions o;
    o.label_column = std::string("label");
    try {
        parse_csv("x,label\n1,a\nfoo,b\n", o);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_csv("x,label\n1,a,extra\n", o), ParseError);
    o.label_column = std::string("missing");
    EXPECT_THROW(parse_csv("x,label\n1,a\n", o), ValidationError);
    CsvOptions no_header;
    no_header.header = false;
    no_header.label_column = std::string("label");
    EXPECT_THROW(parse_csv("1,a\n", no_header), ValidationError);
}

TEST(ParseCsv, NormalizeZeroesConstantColumns) {
    CsvOptions o;
    o.label_column = std::string("label");
    o.normalize = true;
    LabeledDataset d = parse_csv("x,c,label\n1,5,a\n2,5,b\n3,5,a\n", o);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(d.features(r, 1), 0.0);
    EXPECT_NEAR(d.features(0, 0) + d.features(1, 0) + d.features(2, 0), 0.0, 1e-12);
}

TEST(Csv, WriteThenIngestRoundTrip) {
    TempDir dir("csv");
    StreamSpec spec;
    spec.tasks = 1;
    spec.dim = 6;
    spec.samples_per_class = 10;
    const TaskDataset original = generate_stream(spec).front().train;
    write_csv(dir.file("d.csv"), original);
    CsvOptions o;
    o.label_column = std::string("label");
    LabeledDataset back = ingest_csv(dir.file("d.csv"), o);
    ASSERT_EQ(back.features.rows(), original.features.rows());
    EXPECT_LE(max_abs_diff(back.features, original.features), 1e-12);
    // Labels are renumbered by first occurrence; the partition must match.
    for (std::size_t i = 0; i < original.size(); ++i)
        for (std::size_t j = 0; j < original.size(); ++j)
            EXPECT_EQ(back.labels[i] == back.labels[j], original.labels[i] == original.labels[j]);
    EXPECT_THROW(ingest_csv(dir.file("missing.csv"), o), IoError);
}

TEST(Stream, ZeroNoiseIsSeparable) {
    StreamSpec spec;
    spec.tasks = 1;
    spec.noise_sigma = 0.0;
    spec.samples_per_class = 20;
    auto s = generate_stream(spec);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_TRUE(linearly_separable_by_centroids(s[0].train));
}

TEST(Stream, DeterministicInSeedAndShaped) {
    for (StreamGenerator g : {StreamGenerator::SplitGaussians, StreamGenerator::RotatedGaussians}) {
        StreamSpec spec;
        spec.generator = g;
        spec.tasks = 3;
        spec.dim = 8;
        spec.samples_per_class = 25;
        auto a = generate_stream(spec), b = generate_stream(spec);
        ASSERT_EQ(a.size(), 3u);
        for (std::size_t t = 0; t < 3; ++t) {
            EXPECT_EQ(a[t].train.features, b[t].train.features);
            EXPECT_EQ(a[t].test.labels, b[t].test.labels);
            EXPECT_EQ(a[t].train.task_id, t + 1);
            EXPECT_EQ(a[t].train.size() + a[t].test.size(), 50u);
            EXPECT_EQ(a[t].train.features.cols(), 8u);
        }
        spec.seed = 1;
        EXPECT_NE(generate_stream(spec)[0].train.features, a[0].train.features);
    }
}

TEST(Stream, CsvSplitIsLabelDisjoint) {
    LabeledDataset d;
    d.features = DenseMatrix(40, 2);
    for (std::size_t i = 0; i < 40; ++i) {
        d.labels.push_back(i % 4);
        d.features(i, 0) = static_cast<double>(i % 4);
        d.features(i, 1) = static_cast<double>(i);
    }
    d.label_names = {"a", "b", "c", "d"};
    StreamSpec spec;
    spec.generator = StreamGenerator::CsvSplit;
    spec.tasks = 2;
    auto s = split_labeled(d, spec);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].train.class_count, 2u);
    for (std::size_t i = 0; i < s[1].train.size(); ++i) EXPECT_GE(s[1].train.features(i, 0), 2.0);
    spec.tasks = 3;
    EXPECT_THROW(split_labeled(d, spec), ValidationError);
}

TEST(Stream, InvalidSpecsAreRejected) {
    StreamSpec spec;
    spec.train_fraction = 1.0;
    EXPECT_THROW(generate_stream(spec), ValidationError);
    spec = {};
    spec.dim = 1;
    EXPECT_THROW(generate_stream(spec), ValidationError);
}

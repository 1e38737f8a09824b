#include <fstream>

#include <doctest.h>

#include "cropper/dataset.hpp"
#include "fixtures.hpp"

using namespace cropper;
using cropper::testing::TempDir;

TEST_CASE("task names round trip") {
  for (Task t : {Task::FreeForm, Task::SubjectAware, Task::RatioAware})
    CHECK(parse_task(task_name(t)) == t);
  CHECK(parse_task("free") == Task::FreeForm);
  CHECK(parse_task("subject") == Task::SubjectAware);
  CHECK(parse_task("ratio") == Task::RatioAware);
  CHECK_THROWS_AS(parse_task("freestyle"), SchemaError);
}

TEST_CASE("parse_record accepts a full record") {
  TempDir tmp("dataset");
  AnnotatedImage src = testing::make_annotated(tmp.path, "a", 96, 64, 1);
  AnnotatedImage got = parse_record(testing::record_json(src).dump());
  CHECK(got.id == "a");
  CHECK(got.width == 96);
  CHECK(got.height == 64);
  CHECK(got.gt_crops.size() == src.gt_crops.size());
  CHECK(got.gt_crops[0].mos == doctest::Approx(src.gt_crops[0].mos));
  REQUIRE(got.subject_masks.size() == 1);
  CHECK(got.subject_masks[0].cx == doctest::Approx(src.subject_masks[0].cx));
  CHECK(got.ratio_crops.count(AspectRatio(16, 9)) == 1);
}

TEST_CASE("parse_record rejects malformed records") {
  TempDir tmp("dataset");
  AnnotatedImage src = testing::make_annotated(tmp.path, "a", 96, 64, 1);
  auto j = testing::record_json(src);

  auto bad = j;
  bad.erase("id");
  CHECK_THROWS_AS(parse_record(bad.dump()), SchemaError);

  bad = j;
  bad["width"] = 8;  // below the minimum dimension
  CHECK_THROWS_AS(parse_record(bad.dump()), SchemaError);

  bad = j;
  bad["gt_crops"][0]["box"] = {0, 0, 500, 64};  // exceeds width
  CHECK_THROWS_AS(parse_record(bad.dump()), SchemaError);

  bad = j;
  bad["gt_crops"][0]["box"] = {50, 10, 10, 40};  // inverted
  CHECK_THROWS_AS(parse_record(bad.dump()), SchemaError);

  bad = j;
  bad["subject_masks"][0]["center"] = {1.0, 1.0};  // outside its bbox
  CHECK_THROWS_AS(parse_record(bad.dump()), SchemaError);

  CHECK_THROWS_AS(parse_record("not json"), SchemaError);
}

TEST_CASE("load_dataset skips bad lines with diagnostics") {
  TempDir tmp("dataset");
  Dataset src = testing::make_dataset(tmp.path, 3);
  std::filesystem::path manifest = tmp.path / "m.jsonl";
  {
    std::ofstream out(manifest);
    out << testing::record_json(src.images[0]).dump() << "\n";
    out << "{\"id\": broken\n";
    out << testing::record_json(src.images[1]).dump() << "\n";
    out << "\n";  // blank lines are ignored
    out << testing::record_json(src.images[2]).dump() << "\n";
  }
  Dataset d = load_dataset(manifest);
  CHECK(d.images.size() == 3);
  CHECK(d.diagnostics.size() == 1);
  CHECK(d.find("img1") != nullptr);
  CHECK(d.find("nope") == nullptr);
  CHECK(std::filesystem::exists(d.resolve(*d.find("img0"))));
}

TEST_CASE("load_dataset with zero valid records throws") {
  TempDir tmp("dataset");
  std::filesystem::path manifest = tmp.path / "m.jsonl";
  { std::ofstream(manifest) << "garbage\n{\n"; }
  CHECK_THROWS_AS(load_dataset(manifest), EmptyDataset);
  CHECK_THROWS_AS(load_dataset(tmp.path / "missing.jsonl"), SchemaError);
}

TEST_CASE("top_mos_crops sorts by mos, ties by index") {
  AnnotatedImage img;
  img.width = 100;
  img.height = 100;
  CoordSpace px = img.pixel_space();
  img.gt_crops.push_back({make_box(0, 0, 10, 10, px), 3.0});
  img.gt_crops.push_back({make_box(0, 0, 20, 20, px), 5.0});
  img.gt_crops.push_back({make_box(0, 0, 30, 30, px), 5.0});
  img.gt_crops.push_back({make_box(0, 0, 40, 40, px), 1.0});
  auto top = top_mos_crops(img, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].box.x2 == 20);  // first of the tied pair keeps priority
  CHECK(top[1].box.x2 == 30);
  CHECK(top[2].mos == 3.0);
  CHECK(top_mos_crops(img, 99).size() == 4);
  CHECK_THROWS_AS(top_mos_crops(img, 0), SchemaError);
}

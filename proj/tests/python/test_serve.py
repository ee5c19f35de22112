import requests

import memejudge


def test_review_api(demo_run, validate, tmp_path):
    run_dir, _ = demo_run
    with memejudge.serving(run_dir) as url:
        health = validate(requests.get(f"{url}/api/health", timeout=10).json(), "health")
        assert health["status"] == "ok"

        page = validate(requests.get(f"{url}/api/queue", timeout=10).json(), "queue_page")
        assert page["page"] == 1 and page["page_size"] == 10
        assert page["total"] == health["memes"]
        item = page["items"][0]

        if page["total_pages"] > 1:
            second = validate(requests.get(f"{url}/api/queue", params={"page": 2}, timeout=10).json(), "queue_page")
            assert second["items"][0]["meme_id"] > page["items"][-1]["meme_id"]

        detail = validate(requests.get(f"{url}/api/memes/{item['meme_id']}", timeout=10).json(), "meme_detail")
        assert detail["meme_id"] == item["meme_id"]

        image = requests.get(f"{url}/api/memes/{item['meme_id']}/image", timeout=10)
        assert image.status_code == 200
        assert image.content[:4] == b"\x89PNG"

        body = {"verdict": "confirm", "final_label": item["predicted_label"]}
        posted = requests.post(f"{url}/api/memes/{item['meme_id']}/decision", json=body,
                               headers={"X-Moderator-Id": "py-tester"}, timeout=10)
        assert posted.status_code in (200, 201)
        decision = validate(posted.json(), "decision")
        assert decision["moderator_id"] == "py-tester"

        pending = validate(requests.get(f"{url}/api/queue", params={"status": "decided"}, timeout=10).json(),
                           "queue_page")
        assert item["meme_id"] in [i["meme_id"] for i in pending["items"]]

        metrics = validate(requests.get(f"{url}/api/metrics", timeout=10).json(), "metrics")
        assert metrics["progress"]["decided"] >= 1

        missing = requests.get(f"{url}/api/memes/no-such-meme", timeout=10)
        assert missing.status_code == 404
        validate(missing.json(), "error")

        bad = requests.post(f"{url}/api/memes/{item['meme_id']}/decision", json={"verdict": "maybe"},
                            headers={"X-Moderator-Id": "py-tester"}, timeout=10)
        assert bad.status_code == 400
        validate(bad.json(), "error")
    assert (run_dir / "serve" / "decisions.jsonl").exists()

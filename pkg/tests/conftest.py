import json
from datetime import datetime, timezone
from pathlib import Path

import pytest

from phishclust.ingest import record_from_json_dict
from phishclust.records import EnrichedUrlRecord

TS = datetime(2023, 8, 15, tzinfo=timezone.utc)


def make_record(url, **kwargs):
    kwargs.setdefault("submission_time", TS)
    if "url_tokens" not in kwargs:
        from phishclust.textsim import tokenize_url

        kwargs["url_tokens"] = tuple(tokenize_url(url))
    return EnrichedUrlRecord(url=url, **kwargs)


TABLE1_ROWS = [
    {
        "url": "s286.paypal-login.net",
        "ips": ["168.10.10.2"],
        "target": "Paypal",
        "submission_time": "2023-08-15T00:00:00Z",
        "html_text": "paypal, login, password",
    },
    {
        "url": "s8790.paypal-login.net",
        "ips": ["168.10.10.2"],
        "target": "Paypal",
        "submission_time": "2023-08-15T00:00:00Z",
        "html_text": "paypal,log-in, passwd",
    },
    {
        "url": "aws-amazon.net.au",
        "ips": ["198.111.0.59"],
        "target": "Other",
        "submission_time": "2023-08-15T00:00:00Z",
        "html_text": "amazon, aws",
    },
]


@pytest.fixture
def table1_records():
    return [record_from_json_dict(row) for row in TABLE1_ROWS]


@pytest.fixture
def table1_dataset(tmp_path):
    path = tmp_path / "table1.jsonl"
    path.write_text("\n".join(json.dumps(row) for row in TABLE1_ROWS) + "\n")
    return path


def write_jsonl(path: Path, rows) -> Path:
    path.write_text("\n".join(json.dumps(row) for row in rows) + "\n")
    return path

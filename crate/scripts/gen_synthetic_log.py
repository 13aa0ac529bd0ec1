#!/usr/bin/env python3
"""Writes the bundled 3-minute synthetic Danmaku log (Bilibili XML).

Deterministic: the output depends only on SEED. Regenerating changes the
golden caption plan, so keep the two in sync.
"""
import random
import sys
from xml.sax.saxutils import escape

SEED = 20231016
DURATION_S = 180
BASE_UNIX = 1_700_000_000

TOPICS = {
    "food": ["火锅", "辣椒", "牛肉", "汤底", "厨师", "味道"],
    "game": ["操作", "技能", "走位", "装备", "团战", "boss"],
    "music": ["旋律", "节奏", "歌词", "副歌", "鼓点", "吉他"],
}

MOODS = {
    "positive": ["哈哈哈哈", "太好笑了", "好可爱", "开心", "神仙操作", "厉害厉害", "爱了爱了",
                 "太帅气了", "好耶", "精彩", "绝了", "awsl", "666"],
    "negative": ["气死我了", "无聊", "好烦", "垃圾", "失望", "离谱", "恶心", "就这",
                 "别刷屏了", "可恶", "差评"],
    "surprise": ["卧槽", "居然", "天哪", "竟然这样", "震惊", "没想到", "啊这", "我去"],
    "confusion": ["不懂", "为啥", "什么意思", "懵逼", "看不懂", "怎么回事", "疑惑"],
    "neutral": ["打卡", "前排", "路过", "第一次来", "围观", "视频", "1080p", "收藏了"],
}

# (start_s, end_s, mood, topic, messages per second)
SCHEDULE = [
    (0, 10, "neutral", "food", 1.5),
    (10, 24, "positive", "food", 4.0),
    (24, 34, "neutral", "food", 1.0),
    (34, 50, "negative", "game", 3.5),
    (50, 62, "surprise", "game", 4.5),
    (62, 74, "confusion", "game", 2.5),
    (74, 90, "positive", "game", 5.0),
    (90, 100, "neutral", "music", 0.6),
    (100, 118, "positive", "music", 3.0),
    (118, 130, "negative", "music", 2.0),
    (130, 142, "surprise", "music", 3.0),
    (142, 156, "confusion", "food", 1.5),
    (156, 170, "negative", "food", 4.0),
    (170, 180, "positive", "food", 2.5),
]


def main(out):
    rng = random.Random(SEED)
    rows = []
    row_id = 50_000_000_001
    for start, end, mood, topic, rate in SCHEDULE:
        count = round((end - start) * rate)
        for _ in range(count):
            t = start + rng.random() * (end - start)
            r = rng.random()
            if r < 0.45:
                text = rng.choice(TOPICS[topic]) + rng.choice(MOODS[mood])
            elif r < 0.9:
                text = rng.choice(MOODS[mood])
            else:
                # background chatter independent of the segment mood
                text = rng.choice(MOODS["neutral"])
            color = 16777215 if rng.random() < 0.85 else rng.choice([16711680, 65280, 16776960])
            mode = 1 if rng.random() < 0.9 else rng.choice([4, 5])
            user = "%08x" % rng.getrandbits(32)
            rows.append((t, mode, color, user, row_id, text))
            row_id += 1
    rows.sort()
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        "<i>",
        "<chatserver>chat.bilibili.com</chatserver>",
        "<chatid>synthetic-3min</chatid>",
        "<mission>0</mission>",
        "<maxlimit>3000</maxlimit>",
    ]
    for t, mode, color, user, rid, text in rows:
        p = "%.5f,%d,25,%d,%d,0,%s,%d" % (t, mode, color, BASE_UNIX + int(t), user, rid)
        lines.append('<d p="%s">%s</d>' % (p, escape(text)))
    lines.append("</i>")
    with open(out, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    print(f"{len(rows)} messages -> {out}", file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "synthetic_3min.xml")

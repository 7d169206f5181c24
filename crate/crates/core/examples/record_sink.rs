//! Writes pointer actions to a JSONL log and reads them back.

use chroma_mouse::gesture::{ActionKind, PointerAction, ScreenPoint};
use chroma_mouse::sink::{read_event_log, EventSink, RecordSink};

fn main() {
    let path = std::env::temp_dir().join("chroma-mouse-example.jsonl");
    let mut sink = RecordSink::create(&path).unwrap();
    let actions = [
        ActionKind::MoveTo(ScreenPoint { x: 100, y: 200 }),
        ActionKind::LeftClick,
        ActionKind::MoveTo(ScreenPoint { x: 104, y: 198 }),
    ];
    for (i, kind) in actions.into_iter().enumerate() {
        let action = PointerAction {
            kind,
            timestamp: i as u64 * 33,
        };
        sink.emit(&action, i as u64 + 7).unwrap();
    }
    drop(sink);

    print!("{}", std::fs::read_to_string(&path).unwrap());
    let back = read_event_log(&path).unwrap();
    assert_eq!(back.len(), 3);
}

use magdrive_core::coil_model::Axis;
use magdrive_core::control_service::protocol::TweezerState;
use magdrive_core::control_service::{parse_command, parse_line, ErrorCode, Message};
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    -720.0..=720.0f64
}

fn fraction() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn message() -> impl Strategy<Value = Message> {
    let rotating = || (0.0..=1000.0f64, -1000.0..=1000.0f64, angle(), angle());
    prop_oneof![
        (angle(), -90.0..=90.0f64, fraction()).prop_map(|(theta_deg, phi_deg, strength)| {
            Message::Orient {
                theta_deg,
                phi_deg,
                strength,
            }
        }),
        rotating().prop_map(|(a_mt, f_hz, alpha_deg, gamma_deg)| Message::Roll {
            a_mt,
            f_hz,
            alpha_deg,
            gamma_deg
        }),
        rotating().prop_map(|(a_mt, f_hz, alpha_deg, gamma_deg)| Message::Spin {
            a_mt,
            f_hz,
            alpha_deg,
            gamma_deg
        }),
        (
            prop::sample::select(vec![Axis::X, Axis::Y, Axis::Z]),
            1e-3..=1000.0f64,
            fraction()
        )
            .prop_map(|(axis, hz, strength)| Message::Vibrate { axis, hz, strength }),
        (any::<bool>(), angle(), -90.0..=90.0f64, fraction()).prop_map(
            |(on, theta_deg, phi_deg, strength)| {
                Message::Tweezer {
                    state: if on {
                        TweezerState::On
                    } else {
                        TweezerState::Off
                    },
                    theta_deg,
                    phi_deg,
                    strength,
                }
            }
        ),
        Just(Message::Stop),
        "[a-z0-9_.-]{1,64}".prop_map(|name| Message::SelectAssembly { name }),
        (-1.0..=1.0f64, -1.0..=1.0f64, -1.0..=1.0f64, -1.0..=1.0f64)
            .prop_map(|(lx, ly, rx, ry)| Message::Axis { lx, ly, rx, ry }),
        (0u32..=100_000).prop_map(|div| Message::Subscribe { div }),
        Just(Message::Ping),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn format_then_parse_is_identity(m in message()) {
        let line = m.to_string();
        prop_assert!(line.len() <= 1024);
        prop_assert_eq!(parse_command(&line).unwrap(), m);
    }

    #[test]
    fn any_bytes_give_a_message_or_an_error(bytes in prop::collection::vec(any::<u8>(), 0..1100)) {
        let _ = parse_line(&bytes);
    }

    #[test]
    fn verbs_and_keys_ignore_case(theta in -720.0..720.0f64) {
        let upper = parse_command(&format!("ORIENT THETA={theta}")).unwrap();
        let lower = parse_command(&format!("orient theta={theta}")).unwrap();
        prop_assert_eq!(upper, lower);
    }
}

fn code(line: &str) -> ErrorCode {
    parse_command(line).unwrap_err().code
}

#[test]
fn documented_examples() {
    assert_eq!(
        parse_command("ORIENT THETA=45 S=0.8").unwrap(),
        Message::Orient {
            theta_deg: 45.0,
            phi_deg: 0.0,
            strength: 0.8
        }
    );
    assert_eq!(
        parse_command("ROLL A=2 F=1").unwrap(),
        Message::Roll {
            a_mt: 2.0,
            f_hz: 1.0,
            alpha_deg: 0.0,
            gamma_deg: 90.0
        }
    );
    assert_eq!(code("ROLL F=1"), ErrorCode::MissingArg);
    assert_eq!(code("ROLL A=2 F=1 Q=3"), ErrorCode::UnknownKey);
    assert_eq!(code("ROLL A=2 F=1 A=3"), ErrorCode::BadArg);
    assert_eq!(code("ROLL A=-1 F=1"), ErrorCode::Range);
    assert_eq!(code("ROLL A=nan F=1"), ErrorCode::BadArg);
    assert_eq!(code("ORIENT THETA"), ErrorCode::BadArg);
    assert_eq!(code("JUMP"), ErrorCode::UnknownVerb);
    assert_eq!(code("   "), ErrorCode::Empty);
    assert_eq!(code("VIBRATE AXIS=w HZ=2"), ErrorCode::BadArg);
    assert_eq!(code("VIBRATE AXIS=x HZ=0"), ErrorCode::Range);
    assert_eq!(
        parse_command("SUBSCRIBE").unwrap(),
        Message::Subscribe { div: 1 }
    );
    assert_eq!(code("SUBSCRIBE DIV=2.5"), ErrorCode::BadArg);
}

#[test]
fn line_framing() {
    assert_eq!(parse_line(b"PING\r\n").unwrap(), Message::Ping);
    assert_eq!(
        parse_line(&[0xff, 0xfe]).unwrap_err().code,
        ErrorCode::BadEncoding
    );
    let long = vec![b'A'; 1025];
    assert_eq!(parse_line(&long).unwrap_err().code, ErrorCode::TooLong);
}

#[test]
fn errors_render_on_one_line() {
    let e = parse_command("ROLL F=1").unwrap_err();
    assert_eq!(e.to_string(), "ERR missing-arg A");
}

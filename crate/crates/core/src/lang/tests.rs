use super::*;

#[test]
fn parses_smallest_method() {
    let ast = parse("int f() { return 0; }").unwrap();
    let root = ast.root();
    assert_eq!(ast.kind(root), NodeKind::MethodDeclaration);
    let c = ast.children(root);
    assert_eq!(ast.kind(c[0]), NodeKind::TypeName);
    assert_eq!(ast.token(c[0]), Some("int"));
    assert_eq!(ast.kind(c[1]), NodeKind::SimpleName);
    assert_eq!(ast.token(c[1]), Some("f"));
    let block = c[2];
    assert_eq!(ast.kind(block), NodeKind::Block);
    let ret = ast.children(block)[0];
    assert_eq!(ast.kind(ret), NodeKind::ReturnStatement);
    let zero = ast.children(ret)[0];
    assert_eq!(ast.kind(zero), NodeKind::NumberLiteral);
    assert_eq!(ast.token(zero), Some("0"));
    // Keywords and punctuation are not leaves, so the leaf sequence is
    // exactly the kind-bearing tokens.
    assert_eq!(ast.leaf_tokens(), ["int", "f", "0"]);
}

#[test]
fn preorder_leaves_match_hand_parse() {
    let ast = parse("void g(int x) { if (x < 0) { x = 0; } }").unwrap();
    assert_eq!(
        ast.leaf_tokens(),
        ["void", "g", "int", "x", "x", "<", "0", "x", "=", "0"]
    );
    let kinds: Vec<NodeKind> = (0..ast.leaf_count())
        .map(|i| ast.kind(ast.leaf_id(i)))
        .collect();
    assert_eq!(
        kinds,
        [
            NodeKind::TypeName,
            NodeKind::SimpleName,
            NodeKind::TypeName,
            NodeKind::SimpleName,
            NodeKind::SimpleName,
            NodeKind::Operator,
            NodeKind::NumberLiteral,
            NodeKind::SimpleName,
            NodeKind::Operator,
            NodeKind::NumberLiteral,
        ]
    );
}

#[test]
fn bare_return_is_a_syntax_error_at_the_semicolon() {
    let err = parse("int f() { return ; }").unwrap_err();
    assert_eq!((err.line, err.col), (1, 18));
}

#[test]
fn nested_if_condition_reproduces_the_eight_node_operator_path() {
    // Shaped after the overflow guard excerpt: a bare nested if whose
    // condition chains two `&&`. With right-associated `&&`, the path of
    // the final `<` runs through three infix nodes.
    let src = "private boolean format(int charno, boolean warning) {\
               if (warning) if (excerpt.equals(line) && 0 <= charno && charno < sourceExcerpt.length()) { return true; } return false; }";
    let ast = parse(src).unwrap();
    let lt = (0..ast.leaf_count())
        .find(|i| ast.leaf_token(*i) == "<")
        .unwrap();
    let path = ast.path_of_leaf(lt);
    assert_eq!(
        path.kinds,
        [
            NodeKind::MethodDeclaration,
            NodeKind::Block,
            NodeKind::IfStatement,
            NodeKind::IfStatement,
            NodeKind::InfixExpression,
            NodeKind::InfixExpression,
            NodeKind::InfixExpression,
            NodeKind::Operator,
        ]
    );
    // The condition carries the 12 code tokens of the excerpt.
    let start = (0..ast.leaf_count())
        .find(|i| ast.leaf_token(*i) == "excerpt")
        .unwrap();
    let cond_tokens: Vec<&str> = ast.leaf_tokens()[start..start + 12].to_vec();
    assert_eq!(
        cond_tokens,
        ["excerpt", "equals", "line", "&&", "0", "<=", "charno", "&&", "charno", "<", "sourceExcerpt", "length"]
    );
}

#[test]
fn ast_paths_one_per_leaf() {
    let ast = parse("int f() { return 0; }").unwrap();
    let paths = ast.ast_paths();
    assert_eq!(paths.len(), ast.leaf_count());
    let zero_path = &paths[2];
    assert_eq!(
        zero_path.kinds,
        [
            NodeKind::MethodDeclaration,
            NodeKind::Block,
            NodeKind::ReturnStatement,
            NodeKind::NumberLiteral
        ]
    );
    for (i, p) in paths.iter().enumerate() {
        assert_eq!(p.leaf_index, i);
        assert_eq!(p.kinds[0], NodeKind::MethodDeclaration);
        assert!(p.kinds.last().unwrap().is_leaf());
        assert!(p.kinds.len() >= 2);
    }
}

#[test]
fn two_type_updates_math_79_style() {
    let buggy = "double distance(int a, int b) { int sum = 0; int dp = a - b; sum = sum + dp.square(); return sum.sqrt(); }";
    let fixed = buggy.replace("int sum", "double sum").replace("int dp", "double dp");
    let b = parse(buggy).unwrap();
    let f = parse(&fixed).unwrap();
    let diffs: Vec<usize> = (0..b.leaf_count())
        .filter(|i| b.leaf_token(*i) != f.leaf_token(*i))
        .collect();
    assert_eq!(diffs.len(), 2);
    for i in diffs {
        assert_eq!(b.kind(b.leaf_id(i)), NodeKind::TypeName);
        assert_eq!(b.leaf_token(i), "int");
        assert_eq!(f.leaf_token(i), "double");
    }
}

#[test]
fn keyword_checks() {
    assert!(is_language_keyword("if"));
    assert!(!is_language_keyword("counter"));
    assert!(!is_language_keyword("Int"));
}

#[test]
fn leaf_positions_strictly_increase() {
    let src = "public static int addAll(int first, int second) {\n  int total = first + second;\n  if (total >= 100) { total = 100; }\n  return total;\n}";
    let ast = parse(src).unwrap();
    let mut prev = (0u32, 0u32);
    for i in 0..ast.leaf_count() {
        let pos = ast.leaf_pos(i);
        assert!(pos > prev, "leaf {} at {:?} not after {:?}", i, pos, prev);
        prev = pos;
    }
}

#[test]
fn render_round_trips() {
    let sources = [
        "int f() { return 0; }",
        "void g(int x) { if (x < 0) { x = 0; } else { x = x + 1; } }",
        "public static double mix(double a, double b) { double r = a * 0.5 + b * 0.5; return r; }",
        "int loop(int n) { int s = 0; for (int i = 0; i < n; i = i + 1) { s = s + i; } return s; }",
        "boolean any(int a) { while (a > 0) { a = a - 1; } return a == 0 || a < -1 && true; }",
        "int call(Helper h, int x) { h.reset(); return h.combine(x, 1, h.base().offset); }",
        "char pick(String s) { if (!s.isEmpty()) { return 'a'; } return '\\n'; }",
        "int bits(int a, int b) { return a & b | a % 2; }",
        "void deep(int x) { if (x > 0) if (x < 10) { x.log(\"small\"); } }",
    ];
    for src in sources {
        let ast = parse(src).unwrap();
        let rendered = render(&ast);
        let reparsed = parse(&rendered).unwrap_or_else(|e| panic!("{}: {}", rendered, e));
        assert!(
            ast.structurally_equals(&reparsed),
            "round trip changed structure for {:?} -> {:?}",
            src,
            rendered
        );
        // And rendering is a fixed point after one pass.
        assert_eq!(render(&reparsed), rendered);
    }
}

#[test]
fn rendered_statements_get_their_own_lines() {
    let ast = parse("int f() { return 0; }").unwrap();
    let rendered = render(&ast);
    let lines: Vec<&str> = rendered.lines().collect();
    assert_eq!(lines, ["int f ( ) {", "  return 0 ;", "}"]);
}

#[test]
fn truncation_keeps_the_leaf_end() {
    let ast = parse("void deep(int x) { if (x > 0) if (x < 10) { x = 0; } }").unwrap();
    let idx = (0..ast.leaf_count())
        .find(|i| ast.leaf_token(*i) == "<")
        .unwrap();
    let path = ast.path_of_leaf(idx);
    let t = path.truncated_kinds(3);
    assert_eq!(t.len(), 3);
    assert_eq!(*t.last().unwrap(), NodeKind::Operator);
    assert_eq!(t, &path.kinds[path.kinds.len() - 3..]);
}

#[test]
fn statement_kind_of_leaf_falls_back_to_method() {
    let ast = parse("public int f(int x) { if (x > 0) { return x; } return 0; }").unwrap();
    assert_eq!(ast.statement_kind_of_leaf(0), NodeKind::MethodDeclaration); // public
    let gt = (0..ast.leaf_count()).find(|i| ast.leaf_token(*i) == ">").unwrap();
    assert_eq!(ast.statement_kind_of_leaf(gt), NodeKind::IfStatement);
}

#[test]
fn edits_update_delete_insert() {
    let ast = parse("public int f(Helper h, int a) { return h.max(a, 0); }").unwrap();
    // update: swap the literal
    let zero = (0..ast.leaf_count()).find(|i| ast.leaf_token(*i) == "0").unwrap();
    let updated = update_leaf(&ast, zero, "1");
    assert_eq!(updated.leaf_token(zero), "1");
    assert!(parse(&render(&updated)).is_ok());

    // delete: the argument 'a' and the modifier are removable, 'f' is not
    let a_arg = (0..ast.leaf_count())
        .rfind(|i| ast.leaf_token(*i) == "a")
        .unwrap();
    let deleted = delete_leaf(&ast, a_arg).unwrap();
    assert_eq!(deleted.leaf_count(), ast.leaf_count() - 1);
    assert!(parse(&render(&deleted)).is_ok());
    let no_mod = delete_leaf(&ast, 0).unwrap();
    assert_eq!(no_mod.leaf_token(0), "int");
    let name = (0..ast.leaf_count()).find(|i| ast.leaf_token(*i) == "f").unwrap();
    assert!(delete_leaf(&ast, name).is_err());

    // insert: new argument after 'a', and a modifier at the front
    let inserted = insert_after_leaf(&ast, a_arg, "h").unwrap();
    let rendered = render(&inserted);
    assert!(rendered.contains("h . max ( a , h , 0 )"), "{}", rendered);
    assert!(parse(&rendered).is_ok());
    // A modifier anchored at another modifier lands right after it; any
    // other anchor puts it at the front.
    let with_mod = insert_after_leaf(&ast, 0, "static").unwrap();
    assert_eq!(with_mod.leaf_token(0), "public");
    assert_eq!(with_mod.leaf_token(1), "static");
    let front = insert_after_leaf(&ast, 1, "static").unwrap();
    assert_eq!(front.leaf_token(0), "static");
    assert_eq!(front.leaf_token(1), "public");
}

#[test]
fn symbol_table_types_and_roles() {
    let ast = parse("int f(Reader r, int count) { int total = 0; total = r.next(count); return total; }").unwrap();
    let table = SymbolTable::build(&ast);
    assert_eq!(table.type_of("r"), Some("Reader"));
    assert_eq!(table.type_of("count"), Some("int"));
    assert_eq!(table.type_of("total"), Some("int"));
    assert_eq!(table.type_of("next"), None);

    let next_leaf = (0..ast.leaf_count()).find(|i| ast.leaf_token(*i) == "next").unwrap();
    assert_eq!(name_role(&ast, next_leaf), Some(edit::NameRole::CallName));
    let total_use = (0..ast.leaf_count())
        .filter(|i| ast.leaf_token(*i) == "total")
        .nth(1)
        .unwrap();
    assert_eq!(name_role(&ast, total_use), Some(edit::NameRole::VarRef));
}

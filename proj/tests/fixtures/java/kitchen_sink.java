package demo.sink;

import java.io.*;
import java.util.*;
import java.util.function.Function;
import static java.util.Objects.requireNonNull;

@SuppressWarnings({"unchecked", "rawtypes"})
public final class KitchenSink<T extends Comparable<? super T>> implements Iterable<T> {
    private final List<Map<String, List<T>>> nested = new ArrayList<>();
    private int[] counts = {1, 2, 3};
    private static final String BLOCK = """
        text "block" with quotes
        """;

    enum Mode { FAST, SLOW { @Override int cost() { return helper(2); } }; int cost() { return 1; } static int helper(int x) { return x; } }

    record Pair<A, B>(A left, B right) {
        Pair {
            requireNonNull(left);
        }
    }

    public KitchenSink() {
        this(10);
    }

    KitchenSink(int n) {
        super();
        counts = new int[n];
    }

    @Override
    public Iterator<T> iterator() {
        return new Iterator<T>() {
            int i = 0;
            public boolean hasNext() { return i < nested.size(); }
            public T next() {
                if (!hasNext()) throw new NoSuchElementException();
                return null;
            }
        };
    }

    int shifts(int a, long b) {
        int x = a >> 2;
        x >>= 1;
        x >>>= 3;
        long y = b >>> 4;
        boolean g = a >= x && x > 0;
        return g ? (int) (y << 1) : -x;
    }

    String describe(Object o) {
        String s = switch (o) {
            case Integer i when i > 5 -> "big";
            case Integer i -> "int " + i.toString();
            case String str -> {
                yield str.trim();
            }
            default -> String.valueOf(o);
        };
        switch (s.length()) {
            case 1:
            case 2:
                s = s.toUpperCase();
                break;
            default:
                s = s.toLowerCase();
        }
        return s;
    }

    <R> List<R> mapAll(List<T> in, Function<? super T, ? extends R> f) {
        List<R> out = new ArrayList<>();
        in.forEach(e -> out.add(f.apply(e)));
        in.stream().map(f).forEach(out::add);
        Comparator<T> cmp = (T a, T b) -> a.compareTo(b);
        Collections.<T>sort(in, cmp);
        return out;
    }

    void io(File f) throws IOException {
        try (BufferedReader r = new BufferedReader(new FileReader(f)); var w = new StringWriter()) {
            String line;
            while ((line = r.readLine()) != null) {
                w.write(line);
            }
        } catch (FileNotFoundException | SecurityException e) {
            throw e;
        } finally {
            counts[0]++;
        }
        label:
        for (int i = 0, j = 10; i < j; i++, j--) {
            for (int c : counts) {
                if (c == i) continue label;
            }
        }
        do { counts[1]--; } while (counts[1] > 0);
        synchronized (this) { assert counts.length > 0 : "empty"; }
        Object o = (Runnable & Serializable) () -> System.out.println(BLOCK);
        int[][] grid = new int[3][];
        char c = '\'';
        double d = 1.5e-3 + .5 + 0x1Fp2 + 10_000L;
    }
}

package shop;

import static org.junit.Assert.assertEquals;
import static org.junit.Assert.assertFalse;

import org.junit.Test;

public class OrderTest {
    @Test
    public void totalsLines() {
        Inventory inv = new Inventory();
        inv.add("pen", 2);
        inv.add("pad", 1);
        Order order = new Order(new PriceCalculator(10), inv);
        order.addLine("pen", 4);
        order.addLine("pad", 6);
        assertEquals(2, order.lineCount());
        assertEquals(17, order.total(false, "north"));
    }

    @Test
    public void rejectsMissingStock() {
        Order order = new Order(new PriceCalculator(10), new Inventory());
        assertFalse(order.addLine("pen", 4));
        assertEquals(0, order.lineCount());
    }
}
